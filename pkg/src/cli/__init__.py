"""CLI for margin-engine: margin evaluate, train, metrics, phantom, calibrate, agreement, health."""
