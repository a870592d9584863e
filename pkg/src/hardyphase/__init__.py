"""Phase retrieval in H^2(D): recover f = C * O * B from moduli on circles."""

from .errors import InputError, NumericalError, RetrievalError
from .factorization import (
    BlaschkeProduct,
    OuterFactor,
    ReconstructionResult,
    align_constant,
    blaschke_eval,
    outer_boundary,
    outer_interior,
    reconstruct,
    relative_error,
)
from .hilbert import hilbert_mqm, hilbert_mqm_offgrid, hilbert_mqm_on_nodes, hilbert_pv_oracle
from .minvalue import MinSearchConfig, mqmv_retrieve
from .paraconjugate import mqpc_retrieve
from .sampling import CircleGrid, ComplexSamples, ModulusField, RealSamples, make_circle_grid

__version__ = "0.1.0"
