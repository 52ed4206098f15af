"""Create .env file with the default hyperparameters"""

import shutil
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[2]
template = root / '.env.example'
target = root / '.env'

if target.exists() and '--force' not in sys.argv:
    print(f"⚠️  {target} already exists (use --force to overwrite)")
    sys.exit(1)

shutil.copyfile(template, target)
print("✅ .env file created successfully!")

# Verify
sys.path.insert(0, str(root))
from backend.config import Config

Config.validate()
print(f"\nMedial points: {Config.N_POINTS}")
print(f"Loss: alpha={Config.ALPHA}, sigma_abs={Config.SIGMA_ABS or 'gt radius'}, sigma_tan={Config.SIGMA_TAN}")
print(f"Eval IoU threshold: {Config.EVAL_IOU_THRESHOLD}")
