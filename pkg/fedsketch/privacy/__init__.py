from .laplace import DpParams, laplace_noise, add_laplace_noise, clip_l2
from .attack import AttackReport, reconstruction_bound, guessing_attack_experiment, ADVERSARY_UNIFORM, \
    ADVERSARY_SEEDED
from .exceptions import PrivacyException, PrivacyInputError
