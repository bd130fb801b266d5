"""Tests for vpinn-estimator."""
