import pytest

from entmux.grid import (ItuGrid, PairingError, UnknownChannelError, all_pairs, default_grid,
                         energy_conservation_check, itu_channel_wavelength, pair_for_index, table_rows)


def test_pump_channel_wavelength():
    assert itu_channel_wavelength(34) == 1550.12


def test_first_and_last_pairs():
    p1 = pair_for_index(1)
    assert (p1.signal.index, p1.idler.index) == (32, 36)
    p14 = pair_for_index(14)
    assert (p14.signal.wavelength_text, p14.idler.wavelength_text) == ("1562.23", "1538.19")


def test_pair_eight_labels():
    p = pair_for_index(8)
    assert p.label == "S8-I8"
    assert (p.signal.label, p.idler.label) == ("C25", "C43")


@pytest.mark.parametrize("k", [0, 15, -1])
def test_pair_index_out_of_range(k):
    with pytest.raises(PairingError):
        pair_for_index(k)


def test_missing_channel_is_not_invented():
    with pytest.raises(UnknownChannelError):
        default_grid().channel(33)


def test_every_pair_conserves_energy():
    for pair in all_pairs():
        assert energy_conservation_check(pair, 34)
        assert pair.signal_wavelength_nm > 1550.12 > pair.idler_wavelength_nm


def test_table_rows_shape():
    rows = table_rows()
    assert len(rows) == 15
    assert rows[0].startswith("S14-I14\tC19-C49")
    assert rows[-1] == "Pump\tC34\t1550.12"


def test_grid_rejects_non_monotonic_table():
    with pytest.raises(ValueError):
        ItuGrid.from_text("1 1550.00\n2 1551.00\n")


def test_pairing_runs_off_small_grid():
    grid = ItuGrid.from_text("1 1552.00\n2 1551.00\n3 1550.00\n")
    assert pair_for_index(1, 2, grid).label == "S1-I1"
    with pytest.raises(PairingError):
        pair_for_index(2, 2, grid)
