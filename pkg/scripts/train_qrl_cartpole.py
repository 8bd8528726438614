"""Train or evaluate one agent; same flags as the ``hybrid-pg`` entry point.

    python3 scripts/train_qrl_cartpole.py --agent classical --episodes 400 \
        --lr 0.005 --hidden 64 --exp mlp_stable --noise 0.0
    python3 scripts/train_qrl_cartpole.py eval --exp mlp_stable
"""

import sys

from hybrid_pg.cli import main

if __name__ == "__main__":
    sys.exit(main())
