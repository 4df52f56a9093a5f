from .simplex import LpResult, SimplexEngine, SimplexOptions, solve_lp

__all__ = ["LpResult", "SimplexEngine", "SimplexOptions", "solve_lp"]
