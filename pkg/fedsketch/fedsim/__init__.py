from .fed_config import FedConfig, RoundMetrics, ServerState, dense_payload_bytes
from .sampling import sample_devices
from .server import FedAvgServer, SketchedFedAvgServer, aggregate_sketches, run_fedavg, run_fedavg_sketch, \
    resolve_model
from .metrics import emit_metrics_csv, metrics_csv
from .oracle import centralized_oracle
from .exceptions import FedSimException, FedConfigError, TrainingDivergedError
