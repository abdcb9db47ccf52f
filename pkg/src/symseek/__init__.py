"""Partial symmetry detection in point clouds.

Votes for candidate transformations are cast by point pairs, embedded in a
bounded transformation space with an invalid ball around the identity, and
the modes of the resulting density are found by annealed Langevin dynamics
under a geodesic that routes around (or through) the ball. Detected modes
decode back to symmetry planes, translations, or composed rotations.
"""

__version__ = "0.1.0"

from .geometry import (GeometryError, NeighborIndex, PointCloud, add_noise, chamfer,
                       normalize, reflect_point)
from .hough import (HoughPlane, Rotation, TransformSample, TransformSpace,
                    build_reflective_space, build_translation_space, compose_rotation,
                    decode_sample, embed_plane, pair_to_plane)
from .geodesic import GeodesicSpace, ScoreField, geodesic, geodesic_grad, score, score_many
from .langevin import LangevinConfig, WalkerTrace, default_config, run_langevin, walk, walk_many
from .meanshift import MeanShiftConfig, mean_shift, mean_shift_step
from .extraction import (DbscanConfig, ExtractConfig, SymmetryResult, compute_support,
                         dbscan, default_extract_config, extract)
from .metrics import (CompressedCloud, EvalReport, GroundTruth, association, compress,
                      decompress, match_f1, propose_ground_truth)
from .apps import SymmetrizeConfig, asymmetry_residual, sequential_compress, symmetrize
from .shapes import gen_shape
from .io import ParseError, load_cloud, save_cloud
