import os
import sys

from dotenv import load_dotenv

# Add the project root to Python path
project_root = os.path.dirname(os.path.abspath(__file__))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

# .env must be loaded before the logger reads XORCOUNT_LOG_DIR
load_dotenv(os.path.join(project_root, '.env'))


def run_app():
    from main import run
    return run()


if __name__ == '__main__':
    sys.exit(run_app())
