"""Decision-tree contextual bandits: tree policies, distribution tools, simulation."""

try:
    from ._treebandit import *  # noqa: F401,F403
except ImportError:  # source checkout: extension lives on sys.path, not in the package
    from _treebandit import *  # noqa: F401,F403
