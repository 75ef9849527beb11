import itertools
import numpy as np

### object vocabularies ###
shapes = ('cube', 'sphere', 'cylinder')
materials = ('metal', 'rubber')
colors = ('gray', 'red', 'blue', 'green', 'brown', 'purple', 'cyan', 'yellow')

# every distinct (color, material, shape), in a fixed order
attribute_combos = tuple(itertools.product(colors, materials, shapes))
max_unique_objects = len(attribute_combos) # 48

### sample vocabularies ###
sources = ('real', 'synth')
categories = ('object_count_collision', 'object_count_motion',
              'object_count_temporal', 'appearance_order',
              'relative_distance', 'real_free_form')
synth_categories = categories[:5]

### alignment defaults ###
max_duration_s = 30.0
frame_budget = 30

### curation defaults ###
target_zero_ref_fraction = 0.15
# distinct-reference bins: 0..10 plus an overflow bin
histogram_bins = tuple([str(i) for i in range(11)] + ['11+'])

### reference composition of the released training set (reported, not reproduced) ###
reference_total = 164186
reference_real = 103683
reference_synth = 60503

### motion threshold in scene units / s ###
epsilon_v = 1.e-6

### generation defaults ###
temperature = 0.7
max_new_tokens = 1024
max_in_flight = 4
max_tries = 3
backoff_base = 1.0
endpoint_env = 'COF_LLM_ENDPOINT'
key_env = 'COF_LLM_KEY'

### mean relative accuracy confidence thresholds 0.50, 0.55, ..., 0.95 ###
mra_thresholds = np.array([0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95])

def histogram_bin(nrefs):
  """Bin label for a distinct frame-reference count."""
  if nrefs > 10:
    return '11+'
  return str(nrefs)

def empty_histogram():
  return dict((b, 0) for b in histogram_bins)
