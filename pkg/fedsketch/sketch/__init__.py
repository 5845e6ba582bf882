from .sketch_config import SketchConfig
from .hashing import HashSpec
from .count_sketch import FrequencySketch, CountSketch, CountMinSketch, SKETCH_TYPES, sketch_new, deserialize
from .exceptions import SketchException, SketchConfigError, SketchDomainError, SketchInputError, \
    IncompatibleSketchError, SketchDeserializationError
