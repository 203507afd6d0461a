"""Sensor topology of the dexterous hand.

The hand carries 11 tactile sensor arrays spread over four fingers.  Distal
and proximal arrays have 120 sensing units, intermediate arrays 60, for a
total of 1140 units.  Each unit reports a 3-axis force sample as three 8-bit
codes: two tangential axes stored offset-binary (code 128 = zero force) and
one normal axis stored from 0 (no contact).

Canonical unit ordering is frozen here: units are numbered 0..total-1 by
(finger index, sensor index within the finger, unit index within the sensor).
Every file format and image conversion in the toolkit relies on this order.
"""

from dataclasses import dataclass
from enum import Enum

DISTAL_UNITS = 120
INTERMEDIATE_UNITS = 60
PROXIMAL_UNITS = 120

# Rest codes per axis: tangential axes idle at mid-scale, normal at zero.
REST_X = 128
REST_Y = 128
REST_Z = 0
REST_CODES = (REST_X, REST_Y, REST_Z)

AXIS_COUNT = 3


class SensorPosition(Enum):
    DISTAL = 0
    INTERMEDIATE = 1
    PROXIMAL = 2


class GraspPose(Enum):
    PINCH = 0
    TRIPOD = 1
    CYLINDRICAL = 2
    SPHERICAL = 3


@dataclass(frozen=True)
class SensorSpec:
    """One tactile array: where it sits on the finger and how many units it has."""

    position: SensorPosition
    unit_count: int

    def __post_init__(self):
        if self.unit_count <= 0:
            raise ValueError(f"unit_count must be positive, got {self.unit_count}")


@dataclass(frozen=True)
class FingerLayout:
    finger_id: int
    sensors: tuple[SensorSpec, ...]

    def __post_init__(self):
        if not self.sensors:
            raise ValueError(f"finger {self.finger_id} has no sensors")

    @property
    def unit_count(self) -> int:
        return sum(s.unit_count for s in self.sensors)


@dataclass(frozen=True)
class SensorLayout:
    """Finger/sensor/unit topology with the canonical total unit ordering."""

    fingers: tuple[FingerLayout, ...]

    def __post_init__(self):
        if not self.fingers:
            raise ValueError("layout needs at least one finger")

    @property
    def sensor_count(self) -> int:
        return sum(len(f.sensors) for f in self.fingers)

    @property
    def total_units(self) -> int:
        return sum(f.unit_count for f in self.fingers)

    def unit_ranges(self) -> list[tuple[int, int, int, int]]:
        """Enumerate (finger_id, sensor_index, start_unit, stop_unit) in canonical order."""
        ranges = []
        offset = 0
        for finger in self.fingers:
            for si, sensor in enumerate(finger.sensors):
                ranges.append((finger.finger_id, si, offset, offset + sensor.unit_count))
                offset += sensor.unit_count
        return ranges


def default_layout() -> SensorLayout:
    """The canonical DexH13-style hand.

    Three fingers carry (distal 120, intermediate 60, proximal 120); the
    last-enumerated finger (thumb-like) carries (distal 120, proximal 120)
    only.  11 sensors, 1140 units.
    """
    full = (
        SensorSpec(SensorPosition.DISTAL, DISTAL_UNITS),
        SensorSpec(SensorPosition.INTERMEDIATE, INTERMEDIATE_UNITS),
        SensorSpec(SensorPosition.PROXIMAL, PROXIMAL_UNITS),
    )
    short = (
        SensorSpec(SensorPosition.DISTAL, DISTAL_UNITS),
        SensorSpec(SensorPosition.PROXIMAL, PROXIMAL_UNITS),
    )
    fingers = tuple(
        FingerLayout(finger_id=i, sensors=full) for i in range(3)
    ) + (FingerLayout(finger_id=3, sensors=short),)
    return SensorLayout(fingers=fingers)
