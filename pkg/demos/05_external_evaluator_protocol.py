"""Speaking to an out-of-process evaluator over newline-delimited JSON.

The engine spawns the evaluator command, reads its hello line, then exchanges
one request/response pair per architecture.  This demo drives the test stub
(any process honoring the protocol works the same way, e.g. the TypeScript
operator trainer in evaluator/).

Protocol recap, one JSON object per line:
  child -> engine   {"type": "hello", "protocol": 1, "deterministic": true,
                     "concurrent_safe": false}
  engine -> child   {"id": 0, "architecture": [{"wavelet": "db6",
                     "activation": "gelu"}], "budget": {"epochs": 20}}
  child -> engine   {"id": 0, "reward": 0.98265, "metrics": {"val_loss": 0.0175}}
  engine -> child   {"type": "shutdown"}
"""

import math
import sys
from pathlib import Path

from flownas import ArchitectureSpec, Budget, ExternalEvaluator

stub = Path(__file__).parent.parent / "tests" / "stub_evaluator.py"

with ExternalEvaluator([sys.executable, str(stub)], budget=Budget(epochs=20)) as ev:
    print(f"handshake: deterministic={ev.deterministic}, "
          f"concurrent_safe={ev.concurrent_safe}\n")

    for text in ("db6/gelu,sym6/elu", "bior6.8/selu,db6/gelu"):
        arch = ArchitectureSpec.from_string(text)
        reward = ev.evaluate(arch)
        print(f"{text:24} reward = {reward:.6f}  "
              f"(implied val_loss = {-math.log(reward):.6f})")

print("\nshutdown sent; evaluator exited cleanly.")
