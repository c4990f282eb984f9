// workflow: implemented in a later pass
