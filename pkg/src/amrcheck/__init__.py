"""Asynchronous multiparty session subtyping with a bounded deadlock oracle."""

from .checker import (
    CheckerConfig,
    ConfigError,
    HistoryMatrix,
    Reason,
    Verdict,
    VerdictKind,
    check_assumption,
    check_subtype,
    check_with_chain,
)
from .core import (
    Action,
    Branch,
    Direction,
    End,
    Fsm,
    Msg,
    Prefix,
    Rec,
    Select,
    Snapshot,
    SortTable,
    Var,
    act,
    recv,
    send,
    terms_count,
)
from .oracle import Outcome, SystemConfig, compose_system, run_bounded
from .prefix import PrefixPair, fail_early, reduce_full, reduce_step
from .projection import ProjectionError, local_to_fsm, project
from .sync import check_sync_subtype
from .syntax import (
    SourceError,
    format_global,
    format_local,
    parse_fsm_dot,
    parse_global,
    parse_local,
    write_fsm_dot,
)

__version__ = "0.1.0"
