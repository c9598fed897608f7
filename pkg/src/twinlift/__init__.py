"""twinlift: digital-twin teleoperation stack for an aerial manipulator.

A numpy simulation core (coupled quadrotor+arm dynamics under a geometric
SO(3) controller), a JSON/WebSocket topic bridge with delay instrumentation,
and a headless avatar mirror. See README.md for the tour.
"""

from .se3 import EulerAngles, euler_from_rotation, hat, reproject_so3, rotation_from_euler, vee
from .dynamics import (ControlInputs, CouplingWrench, SimulationDiverged, VehicleParams,
                       VehicleState, arm_com_body, arm_joint_accel, coupling_wrench,
                       derivatives, total_mass)
from .control import (ControlGains, ControlSetpoint, attitude_errors, attitude_torque,
                      control_step, default_gains, desired_attitude, force_vector,
                      position_errors, thrust_magnitude)
from .sim import (ArmCommand, DisturbancePulse, PayloadAttach, PayloadRelease,
                  SetpointChange, SimConfig, SimEngine, SimLog, pick_and_place_scenario,
                  rk4_step, run_scenario, summarize)
from .protocol import (ArmMessage, BridgeFrame, CommandMessage, FrameError,
                       FrameSchemaError, MalformedFrameError, MetricsMessage,
                       PoseMessage, UnknownOpError, UnknownTopicError, decode_frame,
                       encode_frame, read_capture, write_capture)
from .broker import Broker
from .delay import DelayLine, InsufficientExcitationError, estimate_delay
from .avatar import FidelityReport, Twin, fidelity_report, write_paired_csv
from .scenario import BridgeSettings, Scenario, ScenarioError, load_scenario, write_scenario

__version__ = "0.1.0"
