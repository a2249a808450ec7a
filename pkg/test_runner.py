import sys
# Add the current directory to the path to find the modules
sys.path.append('.')
from main import main

if __name__ == '__main__':
    # Tiny end-to-end run: two grid points, a handful of replications
    sys.exit(main([
        'simulate',
        '--seed', '7',
        '--n-grid', '256,512',
        '--replications', '3',
        '--truth-j-max', '255',
        '--output', 'results/smoke',
    ]))
