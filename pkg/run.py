#!/usr/bin/env python3
"""
Startup script for schwinger_adapt

Checks the interpreter and dependencies, then hands the arguments to the
command-line interface.
"""

import sys


def check_python_version():
    """Check if Python version is compatible"""
    if sys.version_info < (3, 9):
        print("❌ Error: Python 3.9 or higher is required")
        print(f"Current version: {sys.version}")
        return False
    return True


def check_dependencies():
    """Check if required packages are installed"""
    required_packages = {
        'numpy': 'numpy',
        'scipy': 'scipy',
        'pandas': 'pandas',
        'loguru': 'loguru',
        'dotenv': 'python-dotenv',
    }

    missing_packages = []
    for module, package in required_packages.items():
        try:
            __import__(module)
        except ImportError:
            missing_packages.append(package)

    if missing_packages:
        print(f"❌ Missing packages: {', '.join(missing_packages)}")
        print("Install them with: pip install -r requirements.txt")
        return False

    import scipy
    major, minor = (int(part) for part in scipy.__version__.split('.')[:2])
    if (major, minor) < (1, 11):
        print(f"❌ scipy {scipy.__version__} is too old; BFGS options need scipy 1.11 or newer")
        return False
    return True


def main():
    """Main startup function"""
    if not check_python_version():
        return 1
    if not check_dependencies():
        return 1

    from schwinger_adapt.cli import main as run_cli
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
