from ._accessctl import (
    AccessctlError,
    analyze,
    check,
    generate_dfwfw,
    generate_iptables,
    render_label,
    stateful,
    synthesize,
)

__all__ = [
    "AccessctlError",
    "analyze",
    "check",
    "generate_dfwfw",
    "generate_iptables",
    "render_label",
    "stateful",
    "synthesize",
]
