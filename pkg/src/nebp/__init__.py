"""Particle belief-propagation multi-object tracking with learned message enhancement."""
from .tracker import Tracker, TrackerConfig, TrackManagerConfig
from .models import MeasurementModel, MotionModel

__version__ = "0.1.0"
__all__ = ["Tracker", "TrackerConfig", "TrackManagerConfig", "MeasurementModel", "MotionModel"]
