from .batch import Batch
from .models import Model, LinearModel, MlpModel, build_model
from .sgd import SgdConfig, local_train
from .params import delta, apply_delta
from .exceptions import ModelException, ModelInputError
