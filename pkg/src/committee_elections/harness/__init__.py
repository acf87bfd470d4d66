"""Config loading, parameter sweeps, figure data and the command line."""
