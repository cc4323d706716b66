from .features import (HEADER_SIZE, decode_feature, encode_feature, payload_size, read_feature,
                       write_feature)
from .manifest import DatasetManifest, SampleRecord, load_manifest, save_manifest
from .splits import SplitPlan, materialize_buckets, materialize_split, plan_split
from .synth import SynthSpec, generate_synthetic, synth_samples, uniform_frame_indices
