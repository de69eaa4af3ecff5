#!/usr/bin/env python3
"""
Setup verification for the hypcross toolkit
Checks dependencies, configuration and output directories, then runs a smoke test
"""

import sys
from pathlib import Path

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config import Config  # noqa: E402


def check_dependencies():
    """Check if required dependencies are installed"""
    print("Checking dependencies...")

    required_packages = [
        'numpy',
        'scipy',
        'pandas',
        'dotenv',
        'structlog',
        'rich',
    ]

    missing_packages = []

    for package in required_packages:
        try:
            __import__(package)
            print(f"  ✓ {package}")
        except ImportError:
            print(f"  ✗ {package} - MISSING")
            missing_packages.append(package)

    if missing_packages:
        print(f"\nMissing packages: {', '.join(missing_packages)}")
        print("Please install them with: pip install -r requirements.txt")
        return False

    print("All dependencies are installed!")
    return True


def check_configuration():
    """Check configuration"""
    print("\nChecking configuration...")

    try:
        config = Config()

        if Path('.env').exists():
            print("  ✓ .env file exists")
        else:
            print("  - no .env file, using environment and defaults")

        print(f"  Enumeration cap: {config.ENUM_CAP:,}")
        print(f"  Grid point cap: {config.GRID_POINT_CAP:,}")
        print(f"  Workers: {config.JOBS}")

        if config.validate_config():
            print("  ✓ Configuration is valid")
            return True
        print("  ✗ Configuration validation failed")
        return False

    except Exception as e:
        print(f"  ✗ Configuration error: {str(e)}")
        return False


def create_data_directories(config):
    """Create required data directories"""
    print("\nCreating data directories...")

    try:
        for directory in [config.BASE_DATA_PATH, config.OUTPUT_PATH, config.LOGS_PATH]:
            Path(directory).mkdir(parents=True, exist_ok=True)
            print(f"  ✓ {directory}")
        return True

    except Exception as e:
        print(f"  ✗ Error creating directories: {str(e)}")
        return False


def run_smoke_test():
    """Layer H_3 in d = 2 has 32 frequencies and f = 1 has unit Wiener norm"""
    print("\nRunning smoke test...")

    try:
        from src.services.function_spaces import WienerWeighted, norm
        from src.services.hyperbolic_index import enumerate_layer
        from src.services.trig_poly import SparseTrigPoly

        size = len(enumerate_layer(3, 2))
        value = norm(SparseTrigPoly.constant(2), WienerWeighted(1.0, 1.0))
        ok = size == 32 and value == 1.0
        print(f"  {'✓' if ok else '✗'} |H_3| = {size}, ||1|| = {value}")
        return ok

    except Exception as e:
        print(f"  ✗ Smoke test failed: {str(e)}")
        return False


def show_next_steps():
    """Show next steps for the user"""
    print("\n" + "=" * 60)
    print("SETUP COMPLETED!")
    print("=" * 60)
    print("\nNext steps:")
    print("   python main.py config                                   # Show settings")
    print("   python main.py layers --d 2 --n 3                       # List a layer")
    print("   python main.py rates --task sigma-lower --m 64..16384   # Rate sweep")
    print("   python -m pytest tests/                                 # Unit tests")
    print("   python scripts/run_acceptance_suite.py                  # Desk-scale acceptance")
    print("=" * 60)


def main():
    """Main setup function"""
    print("=" * 60)
    print("hypcross - Setup and Verification Script")
    print("=" * 60)

    all_good = True

    if not check_dependencies():
        all_good = False
        show_next_steps()
        return 1

    config = None
    if not check_configuration():
        all_good = False
    else:
        config = Config()

    if config and not create_data_directories(config):
        all_good = False

    if not run_smoke_test():
        all_good = False

    if all_good:
        print("\n✓ Setup verification completed successfully!")
    else:
        print("\n✗ Some setup issues were found. Please fix them before proceeding.")

    show_next_steps()

    return 0 if all_good else 1


if __name__ == "__main__":
    sys.exit(main())
