#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
emit_tasks.py - Writes generated task scenes as JSON scene files.

Usage:
    splatnav-tasks --output-dir tasks --difficulty Easy Hard --count 5 --seed 0
"""

import logging
import sys
# Suppress all logging output at the earliest possible stage to ensure pure JSON stderr on error.
logging.disable(logging.CRITICAL)

from pathlib import Path

try:
    from splatnav.config import DIFFICULTIES
    from splatnav.io_utils import (
        GracefulArgumentParser,
        add_log_level_argument,
        print_json_stdout,
        report_error,
    )
    from splatnav.scene import save_scene
    from splatnav.tasks import make_task
except ImportError:
    sys.stderr.write('{"status": "error", "message": "The \'splatnav\' package is required. Please install it."}\n')
    sys.exit(1)

# --- Tool Characteristics ---
logger = logging.getLogger(__name__)


def main() -> None:
    """Main entry point."""
    logging.disable(logging.NOTSET)

    parser = GracefulArgumentParser(description="Emit generated Easy/Medium/Hard task scenes as JSON files.")
    parser.add_argument("--output-dir", required=True, help="Directory that receives the scene files.")
    parser.add_argument("--difficulty", nargs="+", choices=DIFFICULTIES, default=list(DIFFICULTIES),
                        help="Difficulties to emit.")
    parser.add_argument("--count", type=int, default=1, help="Scenes per difficulty.")
    parser.add_argument("--seed", type=int, default=0, help="Seed of the first scene; later ones count up.")
    add_log_level_argument(parser)

    try:
        args = parser.parse_args()
        logging.basicConfig(
            level=getattr(logging, args.log_level),
            format='%(asctime)s - %(levelname)s - %(message)s',
            stream=sys.stderr
        )
        if args.count < 1:
            raise ValueError(f"--count must be at least 1, got {args.count}")

        output_dir = Path(args.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        tasks = []
        for difficulty in args.difficulty:
            for seed in range(args.seed, args.seed + args.count):
                scene, start = make_task(difficulty, seed)
                path = output_dir / f"{difficulty.lower()}_{seed:03d}.json"
                save_scene(path, scene)
                tasks.append({
                    "difficulty": difficulty,
                    "seed": seed,
                    "path": str(path),
                    "start_pose": start.to_list(),
                    "goal_pose": scene.goal_pose.to_list(),
                    "obstacles": len(scene.obstacles),
                })
                logger.info(f"Wrote {difficulty} task {seed} to {path}")

        print_json_stdout({"status": "success", "tasks": tasks})

    except Exception as e:
        logger.debug("Task emission failed.", exc_info=True)
        report_error(e)
        sys.exit(1)


if __name__ == "__main__":
    main()
