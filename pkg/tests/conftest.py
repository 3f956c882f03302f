"""Shared pytest fixtures for oamwalk tests."""
import os
import sys

# Add src to path for local testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '../src'))

import pytest

from oamwalk.config import LOG_LEVEL_ENV, OUTPUT_DIR_ENV
from oamwalk.models import QPlateSpec, WaveplateSpec
from oamwalk.resonator import CavityConfig
from oamwalk.testing import WalkFixtures


@pytest.fixture
def symmetric_state():
    """Diagonal input at l = 0."""
    return WalkFixtures.symmetric()


@pytest.fixture
def horizontal_state():
    """Horizontal input at l = 0."""
    return WalkFixtures.horizontal()


@pytest.fixture
def qwp45():
    return WaveplateSpec("quarter", 45.0)


@pytest.fixture
def half_qplate():
    return QPlateSpec(0.5)


@pytest.fixture
def cavity():
    """Default resonator: tau = 10 ns, T = 0.5, PW = 40 ns, GW = 10 ns."""
    return CavityConfig()


@pytest.fixture
def clean_env(monkeypatch):
    """Remove oamwalk environment overrides for the duration of a test."""
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    monkeypatch.delenv(LOG_LEVEL_ENV, raising=False)
    return monkeypatch
