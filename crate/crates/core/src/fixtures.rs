//! The case-study dataset: four indicator cubes holding exactly the values
//! quoted in the case-study text, plus the user map and recession timeline.
//!
//! Cells with no quoted value are left missing. Where the text gives two
//! values for one cell, the second lives on the `note` member of the
//! `variant` dimension instead of overwriting the first.

use std::path::Path;

use crate::areas::AreaTable;
use crate::canonical::write_canonical;
use crate::catalog::{Catalog, CatalogError};
use crate::link::{UserViz, UserVizEntry, UserVizKind};
use crate::model::{DimensionSpec, Observation, Provider};
use crate::scalar::Scalar;
use crate::time::TimeKey;
use crate::{CubeBuilder, DataCube};

pub const GDP: &str = "gdp_per_capita";
pub const LIFE_EXPECTANCY: &str = "life_expectancy";
pub const FEAR_OF_CRIME: &str = "fear_of_crime";
pub const POPULATION: &str = "population";

/// Cube ids in the order the case study adds them to its dashboard.
pub const CUBE_IDS: [&str; 4] = [GDP, LIFE_EXPECTANCY, FEAR_OF_CRIME, POPULATION];

pub const MAIN_AREAS: [&str; 6] = ["USA", "GBR", "EUU", "AFR", "DEU", "PRT"];
pub const FEAR_AREAS: [&str; 4] = ["USA", "DEU", "GBR", "PRT"];

pub struct CubeSpec {
    pub id: &'static str,
    pub title: &'static str,
    pub unit: &'static str,
    /// Extra dimensions as (name, members); the first member is the default.
    pub dimensions: &'static [(&'static str, &'static [&'static str])],
    pub areas: &'static [&'static str],
    pub years: (i32, i32),
}

/// One quoted value. `variant` is `None` for cubes without a variant dimension.
pub struct PinnedValue {
    pub cube: &'static str,
    pub variant: Option<&'static str>,
    pub area: &'static str,
    pub year: i32,
    pub value: &'static str,
    pub quote: &'static str,
}

const VARIANT: &[(&str, &[&str])] = &[("variant", &["reported", "note"])];

pub const CUBES: [CubeSpec; 4] = [
    CubeSpec {
        id: GDP,
        title: "GDP per Capita (current US$)",
        unit: "US$",
        dimensions: VARIANT,
        areas: &MAIN_AREAS,
        years: (1960, 2009),
    },
    CubeSpec {
        id: LIFE_EXPECTANCY,
        title: "Life expectancy at birth, total (years)",
        unit: "years",
        dimensions: VARIANT,
        areas: &MAIN_AREAS,
        years: (1960, 2009),
    },
    CubeSpec {
        id: FEAR_OF_CRIME,
        title: "General Fear of Crime",
        unit: "%",
        dimensions: &[],
        areas: &FEAR_AREAS,
        years: (1996, 2002),
    },
    CubeSpec {
        id: POPULATION,
        title: "Population on 1 January",
        unit: "persons",
        dimensions: &[("age", &["TOTAL"]), ("sex", &["T"])],
        areas: &MAIN_AREAS,
        years: (1960, 2009),
    },
];

const R: Option<&str> = Some("reported");
const N: Option<&str> = Some("note");

#[rustfmt::skip]
pub const PINNED: &[PinnedValue] = &[
    PinnedValue { cube: GDP, variant: R, area: "AFR", year: 1960, value: "151", quote: "Africa starts with a value of 151$ in 1960" },
    PinnedValue { cube: GDP, variant: R, area: "AFR", year: 2008, value: "1593", quote: "ends with 1593$ in 2008" },
    PinnedValue { cube: GDP, variant: R, area: "AFR", year: 1992, value: "720", quote: "Africa has in 1992 a GDP of 720$" },
    PinnedValue { cube: GDP, variant: N, area: "AFR", year: 2008, value: "1350", quote: "in 2008 a GDP of 1350$" },
    PinnedValue { cube: GDP, variant: R, area: "EUU", year: 1960, value: "904", quote: "the European Union starts with 904$ in 1960" },
    PinnedValue { cube: GDP, variant: R, area: "EUU", year: 2009, value: "32838", quote: "ends with 32,838$ in 2009" },
    PinnedValue { cube: GDP, variant: R, area: "EUU", year: 1993, value: "15749", quote: "the data point 1993 in the GDP chart returns a value of 15,749$" },
    PinnedValue { cube: GDP, variant: R, area: "EUU", year: 2008, value: "36834", quote: "In 2008 the GDP has doubled with 36,834$" },
    PinnedValue { cube: GDP, variant: R, area: "USA", year: 2001, value: "35898", quote: "the GDP has increased from 35,898$" },
    PinnedValue { cube: GDP, variant: R, area: "USA", year: 2002, value: "36796", quote: "to 36,796$" },
    PinnedValue { cube: GDP, variant: R, area: "DEU", year: 1996, value: "29769", quote: "the GDP decreased strongly from 29,769$" },
    PinnedValue { cube: GDP, variant: R, area: "DEU", year: 2000, value: "23114", quote: "to 23,114$" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "AFR", year: 1960, value: "42", quote: "for Africa from 42 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "AFR", year: 2008, value: "54", quote: "to 54 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "AFR", year: 1992, value: "53", quote: "in 1992 ... a life expectancy of 53 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: N, area: "AFR", year: 2008, value: "55", quote: "in 2008 ... a life expectancy of 55 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "EUU", year: 1960, value: "69", quote: "for Europe from 69 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "EUU", year: 2008, value: "79", quote: "life expectancy has increased to 79 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "EUU", year: 1993, value: "75", quote: "shows a value of 75 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "USA", year: 2001, value: "77.0341", quote: "life expectancy has increased from 77.0341 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "USA", year: 2002, value: "77.2366", quote: "to 77.2366 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "DEU", year: 1996, value: "76.6732", quote: "life expectancy increases slightly from 76.6732 years" },
    PinnedValue { cube: LIFE_EXPECTANCY, variant: R, area: "DEU", year: 2000, value: "77.9268", quote: "to 77.9268 years" },
    PinnedValue { cube: FEAR_OF_CRIME, variant: None, area: "USA", year: 2001, value: "30", quote: "the perceived fear of crime has increased from 30%" },
    PinnedValue { cube: FEAR_OF_CRIME, variant: None, area: "USA", year: 2002, value: "35", quote: "to 35% from 2001 to 2002" },
    PinnedValue { cube: FEAR_OF_CRIME, variant: None, area: "DEU", year: 1996, value: "39.4", quote: "decreased from 1996 to 2000 from 39.4%" },
    PinnedValue { cube: FEAR_OF_CRIME, variant: None, area: "DEU", year: 2000, value: "35.1", quote: "to 35.1%" },
];

fn build_cube(spec: &CubeSpec, areas: &AreaTable) -> DataCube {
    let mut builder = CubeBuilder::new(spec.id, Provider::Fixture)
        .title(spec.title)
        .unit(spec.unit)
        .areas(spec.areas.iter().map(|code| areas.resolve_code(code)))
        .times((spec.years.0..=spec.years.1).map(|y| TimeKey::year(y).expect("fixture year in range")));
    for (name, members) in spec.dimensions {
        builder = builder.dimension(DimensionSpec::with_members(*name, members.iter().copied()));
    }
    for pin in PINNED.iter().filter(|p| p.cube == spec.id) {
        let value = f64::parse_decimal(pin.value).expect("fixture value is a decimal");
        let members: Vec<&str> = pin.variant.into_iter().collect();
        let time = TimeKey::year(pin.year).expect("fixture year in range");
        builder.set(&members, pin.area, time, Observation::present(value)).expect("fixture cell inside the cube");
    }
    builder.build().expect("fixture cube is valid")
}

/// The four cubes in [`CUBE_IDS`] order. Pure and deterministic.
pub fn fixture_cubes() -> Vec<DataCube> {
    let areas = AreaTable::default();
    CUBES.iter().map(|spec| build_cube(spec, &areas)).collect()
}

pub fn fixture_cube(id: &str) -> Option<DataCube> {
    let areas = AreaTable::default();
    CUBES.iter().find(|s| s.id == id).map(|spec| build_cube(spec, &areas))
}

/// Canonical files as `(file name, bytes)`.
pub fn fixture_files() -> Vec<(String, Vec<u8>)> {
    fixture_cubes().iter().map(|c| (format!("{}.json", c.id()), write_canonical(c))).collect()
}

pub fn write_fixture_files(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in fixture_files() {
        crate::storage::write_atomic(&dir.join(name), &bytes)?;
    }
    Ok(())
}

/// Registers the four cubes in a catalog rooted at `root`.
pub fn build_fixture_catalog(root: &Path) -> Result<Catalog, CatalogError> {
    let catalog = Catalog::open(root)?;
    for cube in fixture_cubes() {
        catalog.register(cube)?;
    }
    Ok(catalog)
}

fn year(y: i32) -> TimeKey {
    TimeKey::year(y).expect("fixture year in range")
}

/// Recessions in the United Kingdom.
pub fn recession_timeline() -> UserViz {
    UserViz {
        user_viz_id: String::new(),
        kind: UserVizKind::Timeline,
        items: vec![
            UserVizEntry::event("early 1980s recession", year(1980), year(1981)),
            UserVizEntry::event("early 1990s recession", year(1990), year(1992)),
            UserVizEntry::event("late 2000s recession", year(2008), year(2009)),
        ],
    }
}

/// Map of European countries labeled like the statistical areas.
pub fn europe_map() -> UserViz {
    UserViz {
        user_viz_id: String::new(),
        kind: UserVizKind::Map,
        items: vec![
            UserVizEntry::place("Germany", 52.52, 13.405),
            UserVizEntry::place("France", 48.857, 2.352),
            UserVizEntry::place("United Kingdom", 51.507, -0.128),
            UserVizEntry::place("Portugal", 38.722, -9.139),
        ],
    }
}
