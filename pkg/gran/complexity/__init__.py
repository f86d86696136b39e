"""Static parameter and MAC analysis of network configs."""
