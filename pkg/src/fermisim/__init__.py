"""Classical simulator of fermionic quantum-simulation algorithms on Hubbard chains."""

import os

# Honor the thread cap before anything pulls in numpy: the BLAS pools read
# their environment once, at load time.  Results never depend on this, only
# wall time does.
_threads = os.environ.get("FERMISIM_THREADS")
if _threads is not None and _threads.isdigit() and int(_threads) >= 1:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)
del _threads

from fermisim.state import (
    InvariantViolation,
    QuantumState,
    RegisterLayout,
    init_basis_state,
    inject_state,
    inner_product,
    set_validation_mode,
    validation_mode,
)

__version__ = "0.1.0"

from fermisim.antisym import (
    OrderedConfiguration,
    QuWordLayout,
    RegisterBank,
    antisymmetrize,
    antisymmetrize_inverse,
    collapse_ancillas,
    prepare_ordered_input,
    transposition_test,
)
from fermisim.sq import (
    DOWN,
    UP,
    HubbardParams,
    LatticeSpec,
    ModeLayout,
    TrotterPlan,
    encode_occupation,
    op_count,
    trotter_evolve,
)
from fermisim.fq import (
    FirstQuantizedLayout,
    op_count_fq,
    prepare_antisymmetric,
    single_particle_plane_wave,
    trotter_evolve_fq,
)
from fermisim.observables import (
    EnergyReport,
    Estimate,
    Histogram,
    SamplingPlan,
    charge_density,
    expected_energy,
    k_point_correlation,
    momentum_distribution,
    pair_correlation,
    required_trials,
)
from fermisim.validate import CheckResult, SUITES, run_suite

__all__ = [
    "CheckResult",
    "DOWN",
    "EnergyReport",
    "Estimate",
    "FirstQuantizedLayout",
    "Histogram",
    "HubbardParams",
    "InvariantViolation",
    "LatticeSpec",
    "ModeLayout",
    "OrderedConfiguration",
    "QuWordLayout",
    "QuantumState",
    "RegisterBank",
    "RegisterLayout",
    "SUITES",
    "SamplingPlan",
    "TrotterPlan",
    "UP",
    "antisymmetrize",
    "antisymmetrize_inverse",
    "charge_density",
    "collapse_ancillas",
    "encode_occupation",
    "expected_energy",
    "init_basis_state",
    "inject_state",
    "inner_product",
    "k_point_correlation",
    "momentum_distribution",
    "op_count",
    "op_count_fq",
    "pair_correlation",
    "prepare_antisymmetric",
    "prepare_ordered_input",
    "required_trials",
    "run_suite",
    "set_validation_mode",
    "single_particle_plane_wave",
    "transposition_test",
    "trotter_evolve",
    "trotter_evolve_fq",
    "validation_mode",
    "__version__",
]
