"""Pretty-print a stats report written by `main.py stats`"""

import json
import sys

if len(sys.argv) != 2:
    print("Usage: python scripts/utils/check_stats.py <stats.json>")
    sys.exit(1)

with open(sys.argv[1], 'r', encoding='utf-8') as f:
    stats = json.load(f)

print('\n' + '='*50)
print('DATASET STATUS')
print('='*50)
print(f'Instances: {stats["n_instances"]} ({stats["n_failed"]} failed fits)')
print(f'Curved: {stats["n_curved"]}')
print(f'Straight: {stats["n_straight"]}')
print(f'Mean radius variation: {stats["mean_radius_variation"]:.3f}')
print(f'Variation <= 0.2: {100 * stats["fraction_low_variation"]:.1f}%')
print(f'Mean fixed-radius IoU: {stats["mean_fixed_radius_iou"]:.3f}')
print('='*50)

edges = stats['curvature_bin_edges']
peak = max(stats['curvature_histogram'] or [0]) or 1
for i, count in enumerate(stats['curvature_histogram']):
    bar = '#' * round(30 * count / peak)
    print(f'{edges[i]:5.3f}-{edges[i + 1]:5.3f} {count:6d} {bar}')
