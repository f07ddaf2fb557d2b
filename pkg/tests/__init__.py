"""Test suite for skillscape package."""
