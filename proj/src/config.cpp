// config: implemented in a later pass
