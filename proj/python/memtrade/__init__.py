"""Layered-memory LLM trading agent: environments, episodes and metrics.

The heavy lifting lives in the C++ extension; this package re-exports its
surface. See the project README for the config file format and the CLI.
"""

try:
    from ._core import (  # noqa: F401
        LocalEmbedding,
        MemoryStore,
        annualized_volatility,
        buy_and_hold,
        cosine,
        cumulative_return,
        max_drawdown,
        metrics_from_returns,
        run_experiment,
        sharpe,
    )
except ImportError:  # in-tree test runs put the extension directly on sys.path
    from _core import (  # noqa: F401
        LocalEmbedding,
        MemoryStore,
        annualized_volatility,
        buy_and_hold,
        cosine,
        cumulative_return,
        max_drawdown,
        metrics_from_returns,
        run_experiment,
        sharpe,
    )

__all__ = [
    "LocalEmbedding",
    "MemoryStore",
    "annualized_volatility",
    "buy_and_hold",
    "cosine",
    "cumulative_return",
    "max_drawdown",
    "metrics_from_returns",
    "run_experiment",
    "sharpe",
]
