# core functionalities
from .errors import *
from .stable_sampling import *
from .kernels import *
from .noise_field import *
from .chaos_expansion import *
from .diagnostics import *
from .field_writer import *
from .parallel import *
from .cli_runner import *
