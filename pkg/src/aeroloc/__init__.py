"""Map-relative Monte Carlo localization for a downward-camera aircraft.

A KLD-adaptive particle filter matches camera frames against an orthophoto
raster with normalized cross-correlation, shapes the matching score into a
particle likelihood through configurable conversion functions, and estimates
the planar pose as the weighted particle mean.  The sim and bench modules
provide a synthetic desk-scale substitute for flight datasets plus the
accuracy/speed/robustness experiment harness.
"""

from .errors import ConfigurationError
from .kld import BinGrid, KldConfig, inverse_normal_cdf, kld_bound, mark_bin, weighted_sample
from .likelihood import ConversionSpec, WeightVector, convert, convert_array, normalize
from .mapio import load_map, save_map
from .motion import NoiseConfig, OdometryDelta, propagate, sample_normal
from .pfilter import (
    FilterConfig,
    Particle,
    ParticleFilter,
    ParticleSet,
    PoseEstimate,
    estimate_pose,
    init_particles,
    run_flight,
    step,
)
from .raster import (
    CameraModel,
    Pose2D,
    RasterMap,
    extract_patch,
    extract_patches,
    pixel_to_world,
    to_grayscale,
    world_to_pixel,
    wrap_angle,
)
from .report import FrameRow, RunReport, read_report_csv, write_report_csv
from .similarity import pearson, pearson_batch
from .sim import (
    AgeSpec,
    FlightLog,
    FlightPlan,
    WorldSpec,
    age_map,
    dead_reckoning,
    generate_flight,
    generate_world,
    load_flight,
    render_frame,
    save_flight,
    synth_odometry,
)

__version__ = "0.1.0"
