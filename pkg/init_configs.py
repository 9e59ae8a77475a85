# Preset Config Initialization Script
# This script writes the preset experiment configs and plot specs

import sys

from config import Config
from covest.utils.config_utils import write_preset_configs


def init_configs(directory=None, force=False):
    """Write the preset configs and plot specs"""
    directory = directory or Config.CONFIGS_DIR
    print("Initializing covest preset configs...")
    print("=" * 50)

    try:
        results = write_preset_configs(directory, force=force)
    except Exception as e:
        print(f"✗ Error writing configs: {e}")
        return False

    for path, written in results:
        if written:
            print(f"✓ Created {path}")
        else:
            print(f"✓ Found existing {path}")

    print("=" * 50)
    print("Preset configs ready. Run an experiment with:")
    print(f"  python app.py run {directory}/fig4_correlation.env")
    return True


if __name__ == '__main__':
    force = '--force' in sys.argv[1:]
    args = [a for a in sys.argv[1:] if a != '--force']
    sys.exit(0 if init_configs(args[0] if args else None, force) else 1)
