"""Regenerate the JSON config files in configs/ from the library factories."""
from pathlib import Path

from leadtime_rl.experiment import config_to_json, desk_config, paper_scale_config

out = Path(__file__).resolve().parent.parent / "configs"
out.mkdir(exist_ok=True)
(out / "desk.json").write_text(config_to_json(desk_config()) + "\n")
(out / "paper_220.json").write_text(config_to_json(paper_scale_config(220)) + "\n")
(out / "paper_100.json").write_text(config_to_json(paper_scale_config(100)) + "\n")
print("wrote", [p.name for p in sorted(out.glob("*.json"))])
