"""Time-averaged weak values, transition-path-time statistics and weak-value uncertainty relations."""
