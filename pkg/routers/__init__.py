from . import calibration, oracle, polya_urn, simulation, urn_chain

router_modules = [polya_urn, urn_chain, calibration, simulation, oracle]
