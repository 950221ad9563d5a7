"""Loop-free episodic MDPs, occupancy measures and exact evaluation."""
