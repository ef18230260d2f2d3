"""MPC-friendly vision transformer workbench (Python facade over the C++ core)."""

try:
    from ._mpcvit import *  # noqa: F401,F403  (installed wheel layout)
    from ._mpcvit import __doc__ as _core_doc
except ImportError:  # build-tree layout: _mpcvit.so next to the build dir
    from _mpcvit import *  # noqa: F401,F403
    from _mpcvit import __doc__ as _core_doc

__all__ = [
    "encode",
    "decode",
    "SecureSession",
    "attention",
    "attention_kinds",
    "cot_cost",
    "published_latencies",
    "calibrate_cost_model",
    "variant_latency",
    "wan_seconds",
    "gen_dataset",
    "dataset_info",
    "forward_logits",
    "mpc_forward",
    "ConfigError",
    "CorruptFileError",
    "ShapeError",
]
