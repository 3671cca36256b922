"""Random algebraic constructions of K_{s,t}-free bipartite graphs over finite fields."""

__version__ = "0.1.0"
