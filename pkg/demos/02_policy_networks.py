"""The policy networks up close: log-flows, gradients, one Adam step.

Each network maps an encoded state to one log-flow per action; exp of that is
the (always positive) flow used for sampling.  Backpropagation is explicit,
so we can sanity-check it against finite differences right here.
"""

import numpy as np

from flownas import SearchSpace, encode
from flownas.policy_net import AdamState, NetGradients, adam_step, backward, forward, init

space = SearchSpace(("db6", "sym6", "coif6"), ("gelu", "elu"), 1)
net = init(space.encoding_dim, hidden_dim=16, output_dim=3, seed=0)

x = encode((), space)  # the root state: all zeros
log_flows, cache = forward(net, x)
print("log-flows at the root:", np.round(log_flows, 4))
print("flows (always > 0):   ", np.round(np.exp(log_flows), 4))

# pick a cotangent and compare analytic vs numerical gradients of one entry
cot = np.array([1.0, -0.5, 2.0])
grads = backward(net, cache, cot)

h = 1e-6
keep = net.w2[0, 3]
net.w2[0, 3] = keep + h
up = cot @ forward(net, x)[0]
net.w2[0, 3] = keep - h
down = cot @ forward(net, x)[0]
net.w2[0, 3] = keep
fd = (up - down) / (2 * h)
print(f"\nd(loss)/d(w2[0,3]): analytic {grads.w2[0, 3]:+.8f}, "
      f"finite difference {fd:+.8f}")

# one Adam step moves each parameter by about the learning rate
adam = AdamState.for_network(net, learning_rate=1e-3)
before = net.b2.copy()
adam_step(net, adam, grads)
print("\nAdam step on output bias:")
print("  before:", np.round(before, 6))
print("  after: ", np.round(net.b2, 6))
print("  moved: ", np.round(net.b2 - before, 6), "(~ +/- learning rate)")
