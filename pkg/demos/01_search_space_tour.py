"""Tour of the decision tree: states, actions, encodings, enumeration.

An architecture is built one slot at a time: wavelet, activation, wavelet,
activation, ...  This script walks a single path by hand and shows how the
engine sees each intermediate state.
"""

import numpy as np

from flownas import (
    SearchSpace,
    apply,
    decode,
    encode,
    enumerate_terminals,
    next_slot_kind,
)

space = SearchSpace(
    wavelets=("db6", "sym6", "bior6.8"),
    activations=("gelu", "elu"),
    n_blocks=2,
)

print(f"search space: {len(space.wavelets)} wavelets x {len(space.activations)} "
      f"activations over {space.n_blocks} blocks")
print(f"terminal architectures: {space.n_terminals}")
print(f"policy input width: {space.encoding_dim}\n")

state = ()
for action in (1, 0, 2, 1):
    kind = next_slot_kind(state, space)
    print(f"state {state!r:24} next choice: {kind.value:10} "
          f"encoding: {encode(state, space).astype(int)}")
    state = apply(state, action, space)

print(f"state {state!r:24} next choice: {next_slot_kind(state, space).value}")
print(f"decoded architecture: {decode(state, space)}\n")

print("first six terminals in lexicographic order:")
for term in enumerate_terminals(space)[:6]:
    print(f"  {term}  ->  {decode(term, space)}")

# the encoding is injective: no two states share a vector
vectors = {encode(t, space).tobytes() for t in enumerate_terminals(space)}
print(f"\ndistinct encodings over {space.n_terminals} terminals: {len(vectors)}")
assert len(vectors) == space.n_terminals
