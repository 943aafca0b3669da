"""Outcome prediction from player tracking: micro-event windows, fuzzy presence
features, a triplet-trained dilated causal encoder, and distance-based classifiers."""

from .court import ActionLabel, CourtSpec, Event, Frame, MicroEvent, RawTag, validate_frame
from .encoder import EncoderConfig, EncoderParams, encode, forward_sequence, init_params
from .evaluation import confusion, knn_classify, make_split, run_experiment_grid, svm_classify
from .fuzzy import KernelBank, TriParams, fuzzify, tri_membership
from .ingest import SynthConfig, align, generate_synthetic, parse_pbp, parse_tracking
from .segmentation import WindowConfig, census, filter_events, slide_windows
from .triplet import TripletConfig, sample_triplet, train, triplet_loss

__version__ = "0.1.0"
