from .synthetic import SyntheticSpec, DeviceShard, FederatedDataset, generate_synthetic, shard_sizes
from .storage import save_csv, load_csv
from .exceptions import DataException, DataConfigError, DataParseError, DatasetNotFoundError
