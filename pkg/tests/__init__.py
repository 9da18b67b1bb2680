"""Test package for the fockbench workbench."""
