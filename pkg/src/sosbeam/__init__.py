"""Sound-speed-marginalized adaptive beamforming for active sonar imaging.

Simulates multipath point-target returns, runs the receive chain
(quantization, TVG, quadrature demodulation, matched filtering), and images
with DAS, MVDR, or an MVDR beamformer marginalized over a Gaussian
sound-speed posterior via Gauss-Hermite quadrature.
"""

from .beamform import (BeamformerConfig, ImageResult, PixelResult, SosPosterior,
                       bayes_pixel, beamform_image, capon_power, das_pixel,
                       gamma_of_p, log_likelihood, mvdr_pixel, mvdr_weights,
                       sos_posterior)
from .chain import demodulate, matched_filter, quantize, tvg
from .core import (ArrayGeometry, FocalPoint, LfmPulse, ScanGrid, hann_weights,
                   round_trip_time, steering_vector)
from .covariance import (HermitianMatrix, SnapshotSet, delayed_snapshot,
                         diagonal_load, forward_backward, sample_covariance,
                         subarray_snapshots)
from .cube import BasebandCube, RawDataCube, read_cube, write_cube
from .metrics import (Box, DbImage, MetricsReport, envelope_db, fwhm, pmal,
                      rmse_db)
from .quadrature import QuadratureRule, SosPrior, gauss_hermite, node_to_sos
from .simulate import (Environment, PathArrival, SimConfig, Target,
                       depth_averaged_sos, enumerate_paths, lfm_pulse_samples,
                       synthesize_rx)

__version__ = "0.1.0"
