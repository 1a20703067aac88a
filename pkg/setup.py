"""
Setup and initialization script for the Zero Cell Analyzer
Creates the output directory, the .env file and checks the numerical stack
"""
import os
import shutil
from pathlib import Path


def setup_directories():
    """Create necessary directories"""
    directories = [
        'results/sweeps',
        'results/regimes',
        'results/simulations',
    ]

    for directory in directories:
        Path(directory).mkdir(parents=True, exist_ok=True)
        print(f"✓ Created directory: {directory}")


def check_env_file():
    """Check if .env file exists"""
    if not os.path.exists('.env'):
        print("\n⚠️  .env file not found")
        print("Creating .env from .env.example...")

        if os.path.exists('.env.example'):
            shutil.copy('.env.example', '.env')
            print("✓ Created .env file")
            print("\n⚠️  Edit ZEROCELL_THREADS in .env to match your machine")
            print("   (optional - the CPU count is used when it is unset)")
        else:
            print("✗ .env.example not found")
    else:
        print("\n✓ .env file exists")


def verify_dependencies():
    """Verify that key dependencies are installed"""
    print("\nVerifying dependencies...")

    dependencies = [
        ('numpy', 'NumPy'),
        ('scipy', 'SciPy'),
        ('pandas', 'Pandas'),
        ('pydantic', 'Pydantic'),
        ('dotenv', 'python-dotenv'),
        ('pytest', 'pytest'),
    ]

    missing = []

    for module, name in dependencies:
        try:
            __import__(module)
            print(f"✓ {name} is installed")
        except ImportError:
            print(f"✗ {name} is NOT installed")
            missing.append(module)

    if missing:
        print(f"\n⚠️  Missing dependencies: {', '.join(missing)}")
        print("   Run: pip install -r requirements.txt")
    else:
        print("\n✓ All dependencies are installed")
    return not missing


def check_quadrature():
    """Build the Gauss-Kronrod tables once and compare a known mean volume"""
    try:
        import math
        from quadrature.kronrod import QuadRule, kronrod_rule
        from special.functions import ModelParams
        from engine.exact import mean_volume

        for rule in QuadRule:
            print(f"✓ {rule.value}: {kronrod_rule(rule).size} nodes")
        mean = float(mean_volume(ModelParams(n=2, r=1.0, gamma=1.0)))
        if abs(mean - math.pi ** 3 / 2) < 1e-10:
            print(f"✓ E[V] for n=2, r=1, gamma=1 is {mean:.12g}")
        else:
            print(f"✗ E[V] for n=2, r=1, gamma=1 is {mean:.12g}, expected pi^3/2")
    except Exception as e:
        print(f"✗ Error checking the exact engine: {e}")


def main():
    """Run setup"""
    print("="*70)
    print("ZERO CELL ANALYZER - SETUP")
    print("="*70)

    # Create directories
    print("\n1. Setting up directories...")
    setup_directories()

    # Check environment file
    print("\n2. Checking environment configuration...")
    check_env_file()

    # Verify dependencies
    print("\n3. Verifying dependencies...")
    if verify_dependencies():
        print("\n4. Checking the exact engine...")
        check_quadrature()

    print("\n" + "="*70)
    print("SETUP COMPLETE!")
    print("="*70)
    print("\nNext steps:")
    print("1. Edit .env to set ZEROCELL_THREADS (optional)")
    print("2. Exact moments: python zerocell.py moments --n 3 --r 2 --gamma 1")
    print("3. Variance sweep: python zerocell.py sweep --mode fig1 --out results/sweeps/fig1.csv")
    print("4. Run the tests: pytest -m 'not slow'")
    print("="*70 + "\n")


if __name__ == "__main__":
    main()
