import config


def _parse_list(text, cast):
    return [cast(s.strip()) for s in text.replace('[', '').replace(']', '').split(',') if s.strip()]


def get_simulation_parameters(params=None, ask=input):
    """
    Interactively prompts the user to set experiment parameters.
    Pressing Enter keeps the value shown. Returns the parameter dictionary.
    """
    params = dict(params or config.get_default_params())

    print("=" * 40)
    print("--- Private Density Experiment Setup ---")
    print("=" * 40)
    print("Current Parameters:")
    print(f"  1. Dimension d:            {params['D']}")
    print(f"  2. Smoothness beta:        {params['BETA']}")
    print(f"  3. Discriminator delta:    {params['DELTA']}")
    print(f"  4. Sobolev radius R:       {params['RADIUS']}")
    print(f"  5. Privacy level alpha:    {params['ALPHA']}")
    print(f"  6. Sample sizes n:         {params['N_GRID']}")
    print(f"  7. Replications:           {params['REPLICATIONS']}")
    print(f"  8. Mechanism (block/global): {params['MECHANISM']}")
    print(f"  9. Selector (fixed/adaptive): {params['SELECTOR']}")
    print("-" * 40)

    use_defaults = ask("Run with these parameters? (yes/no): ").strip().lower()
    if use_defaults not in ['n', 'no']:
        print("Using current parameters.")
        return params

    print("--- Enter Custom Parameters ---")
    try:
        params["D"] = int(ask(f"  1. Dimension d (default: {params['D']}): ") or params['D'])
        beta = ask(f"  2. Smoothness beta, one value or comma-sep per axis (default: {params['BETA']}): ")
        if beta:
            values = _parse_list(beta, float)
            params["BETA"] = values[0] if len(values) == 1 else values
        delta = ask(f"  3. Discriminator delta (default: {params['DELTA']}): ")
        if delta:
            values = _parse_list(delta, float)
            params["DELTA"] = values[0] if len(values) == 1 else values
        params["RADIUS"] = float(ask(f"  4. Sobolev radius R (default: {params['RADIUS']}): ") or params['RADIUS'])
        params["ALPHA"] = float(ask(f"  5. Privacy level alpha (default: {params['ALPHA']}): ") or params['ALPHA'])
        grid = ask(f"  6. Sample sizes (comma-sep list) (default: {params['N_GRID']}): ")
        if grid:
            params["N_GRID"] = _parse_list(grid, int)
        params["REPLICATIONS"] = int(ask(f"  7. Replications (default: {params['REPLICATIONS']}): ") or params['REPLICATIONS'])
        params["MECHANISM"] = (ask(f"  8. Mechanism (default: {params['MECHANISM']}): ") or params['MECHANISM']).strip()
        params["SELECTOR"] = (ask(f"  9. Selector (default: {params['SELECTOR']}): ") or params['SELECTOR']).strip()
        config.validate_params(params)
    except ValueError as e:
        print(f"Invalid input ({e}). Reverting to default parameters.")
        params = config.get_default_params()

    return params
