"""lazevm: a lazy lambda-calculus VM with an inspectable heap, explicit
un-sharing primitives (dup / deepDup), reachability GC instrumentation, a
small surface language and a space-behavior benchmark harness."""

from .core import (
    Alt, App, Case, Con, CoreExpr, DeepDup, Dup, Lam, LazevmError, Let, Lit,
    Name, NameSupply, PrimApp, Program, Seq, Var, alpha_equivalent,
    check_normalized, erase_program, erase_unsharing, free_vars, fresh_rename,
    is_value, normalize, pretty, pretty_program, substitute,
    unguarded_free_vars,
)
from .gc import (
    CSV_COLUMNS, GC_OFF, GcPolicy, Metrics, check_lemma_instance, collect,
    unguarded_reachable,
)
from .heap import Blackhole, Bound, DanglingRootError, Heap, reachable
from .machine import (
    BlackholeEnteredError, BudgetExceededError, DupOfBlackholeError,
    EvalResult, MachineConfig, MachineError, NoMatchingAlternativeError,
    PrimTypeMismatchError, UnboundNameError, apply_deep_dup, apply_dup,
    evaluate, init_config, make_config, observe, render_observable,
    root_set, run_config, step,
)
from .surface import SourceError, desugar, load_file, load_program, parse_program

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
