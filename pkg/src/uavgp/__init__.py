"""Energy-fair UAV placement and uplink power control via geometric programming."""
