"""Navigation-segment toolkit for interactive multiview streaming.

Partitions a 1-D manifold of camera views into independently decodable
navigation segments, allocates segments per user request under a
navigation-ball buffering model, and evaluates storage/rate/distortion
trade-offs on simulated navigation sessions.
"""

from .backend import get_backend
from .codec import RateTable, load_rate_table, save_rate_table, segment_cost, \
    storage_cost, synthesize_rate_table
from .domain import CameraRig, NavigationBall, Popularity, Viewpoint, \
    ball_view_range, distance, load_popularity, make_popularity, \
    nearest_camera, save_popularity
from .models import BallScheduleParams, SceneModel, expected_distortion_mc, \
    expected_requests_alpha, g_factor, hole_area_bound, model_rate_cost, \
    t_star, view_distortion
from .partition import Partition, PartitionObjectiveParams, brute_force_optimal, \
    equidistant_partition, partition_objective, select_baseline_nk, solve_optimal
from .allocation import AllocationConfig, AllocationDecision, allocate_heuristic, \
    allocate_s0, dedup_against_memory, render_reference_for
from .simulator import SessionConfig, SessionTrace, add_virtual_shift, \
    aggregate_sessions, generate_path, measure_empirical_alpha, run_session, \
    run_sessions

__version__ = "0.1.0"

__all__ = [
    "AllocationConfig", "AllocationDecision", "BallScheduleParams", "CameraRig",
    "NavigationBall", "Partition", "PartitionObjectiveParams", "Popularity",
    "RateTable", "SceneModel", "SessionConfig", "SessionTrace", "Viewpoint",
    "add_virtual_shift", "aggregate_sessions", "allocate_heuristic", "allocate_s0",
    "ball_view_range", "brute_force_optimal", "dedup_against_memory", "distance",
    "equidistant_partition", "expected_distortion_mc", "expected_requests_alpha",
    "g_factor", "generate_path", "get_backend", "hole_area_bound",
    "load_popularity", "load_rate_table", "make_popularity",
    "measure_empirical_alpha", "model_rate_cost", "nearest_camera",
    "partition_objective", "render_reference_for", "run_session", "run_sessions",
    "save_popularity", "save_rate_table", "segment_cost", "select_baseline_nk",
    "solve_optimal", "storage_cost", "synthesize_rate_table", "t_star",
    "view_distortion",
]
