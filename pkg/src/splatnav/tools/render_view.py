#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
render_view.py - Renders the view from a pose for debugging.

Writes a PNG of the scene as seen from --pose (default: the task's start pose)
and reports how far the view is from the goal view.

Usage:
    splatnav-render --difficulty Hard --seed 2 --pose 5 5 1 0.7 --output view.png
"""

import logging
import sys
# Suppress all logging output at the earliest possible stage to ensure pure JSON stderr on error.
logging.disable(logging.CRITICAL)

from pathlib import Path

try:
    from splatnav.camera import Camera
    from splatnav.config import DIFFICULTIES, CameraConfig
    from splatnav.core import Pose
    from splatnav.errors import ConfigurationError
    from splatnav.io_utils import (
        GracefulArgumentParser,
        add_log_level_argument,
        print_json_stdout,
        report_error,
    )
    from splatnav.scene import load_scene, render
    from splatnav.similarity import describe, dissimilarity
    from splatnav.tasks import make_task
    from splatnav.utils import save_image_png
except ImportError:
    sys.stderr.write('{"status": "error", "message": "The \'splatnav\' package is required. Please install it."}\n')
    sys.exit(1)

# --- Tool Characteristics ---
logger = logging.getLogger(__name__)


def main() -> None:
    """Main entry point."""
    logging.disable(logging.NOTSET)

    parser = GracefulArgumentParser(description="Render the camera view from a pose in a task or scene file.")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--difficulty", choices=DIFFICULTIES, help="Generated task difficulty.")
    source.add_argument("--scene", help="Path to a JSON scene file.")
    parser.add_argument("--seed", type=int, default=0, help="Task seed for generated tasks.")
    parser.add_argument("--pose", type=float, nargs=4, metavar=("X", "Y", "Z", "THETA"),
                        help="Camera pose; defaults to the start pose.")
    parser.add_argument("--goal", action="store_true", help="Render from the goal pose instead.")
    parser.add_argument("--width", type=int, default=256, help="Image width in pixels.")
    parser.add_argument("--height", type=int, default=192, help="Image height in pixels.")
    parser.add_argument("--output", required=True, help="PNG output path.")
    add_log_level_argument(parser)

    try:
        args = parser.parse_args()
        logging.basicConfig(
            level=getattr(logging, args.log_level),
            format='%(asctime)s - %(levelname)s - %(message)s',
            stream=sys.stderr
        )

        if args.scene:
            scene = load_scene(args.scene)
            start = scene.start_pose
        else:
            scene, start = make_task(args.difficulty, args.seed)
        if args.goal:
            pose = scene.goal_pose
        elif args.pose:
            pose = Pose(*args.pose)
        elif start is not None:
            pose = start
        else:
            raise ConfigurationError("The scene has no start_pose; pass --pose or --goal")

        camera = Camera.from_config(CameraConfig(width=args.width, height=args.height))
        view = render(scene, camera, pose)
        goal_view = render(scene, camera, scene.goal_pose)
        output_path = save_image_png(Path(args.output), view)
        logger.info(f"Rendered {scene.backend} view from {pose} to {output_path}")

        print_json_stdout({
            "status": "success",
            "output_path": str(output_path),
            "backend": scene.backend,
            "pose": pose.to_list(),
            "goal_pose": scene.goal_pose.to_list(),
            "dissimilarity_to_goal": dissimilarity(describe(goal_view), describe(view)),
        })

    except Exception as e:
        logger.debug("Render failed.", exc_info=True)
        report_error(e)
        sys.exit(1)


if __name__ == "__main__":
    main()
