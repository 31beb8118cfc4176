"""Experiment harness: configs, runs, sweeps and the command line."""
