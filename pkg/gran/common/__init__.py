"""Configs, logging and file helpers shared by every module."""
