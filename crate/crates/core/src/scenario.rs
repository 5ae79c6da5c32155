//! Deployment geometry: one omnidirectional eNB, a lattice of square
//! buildings (each optionally hosting a HeNB at its center) and the UE drop.

use rand::Rng;

use crate::channel::{dbm_to_mw, PropagationParams};
use crate::config::{Access, BuildingParams, ScenarioConfig, UeRegion};
use crate::error::{Error, Result};
use crate::grid::CellId;
use crate::rng::substream;
use crate::traffic::FlowClass;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Axis-aligned square footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Building {
    pub id: usize,
    pub center: Point,
    pub half_m: f64,
}

impl Building {
    pub fn contains(&self, p: &Point) -> bool {
        (p.x - self.center.x).abs() <= self.half_m && (p.y - self.center.y).abs() <= self.half_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Macro,
    Femto { building: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellNode {
    pub id: CellId,
    pub kind: CellKind,
    pub position: Point,
    pub tx_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UePlacement {
    pub id: usize,
    pub position: Point,
    /// Building the UE is inside, if any.
    pub building: Option<usize>,
    pub serving: CellId,
}

impl UePlacement {
    pub fn indoor(&self) -> bool {
        self.building.is_some()
    }
}

/// Static large-scale link between one UE and one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub walls: u32,
    pub shadowing_db: f64,
    /// Mean received power per RB, before fast fading.
    pub rx_dbm_per_rb: f64,
}

impl LinkBudget {
    pub fn rx_mw_per_rb(&self) -> f64 {
        dbm_to_mw(self.rx_dbm_per_rb)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowPlacement {
    pub id: usize,
    pub ue: usize,
    pub class: FlowClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// Cell 0 is the eNB; HeNBs follow in building order.
    pub cells: Vec<CellNode>,
    pub buildings: Vec<Building>,
    pub ues: Vec<UePlacement>,
    /// `links[ue][cell]`
    pub links: Vec<Vec<LinkBudget>>,
    pub flows: Vec<FlowPlacement>,
}

pub const MACRO_CELL: CellId = 0;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Flow id of `class` on `ue`: three consecutive ids per UE.
pub fn flow_id(ue: usize, class: FlowClass) -> usize {
    3 * ue + class.index()
}

/// Building lattice centered on the district center. Every footprint must
/// lie inside the macro disk.
pub fn build_buildings(p: &BuildingParams, macro_radius_m: f64) -> Result<Vec<Building>> {
    let pitch = p.pitch_m();
    let half = p.size_m / 2.0;
    let x0 = p.center_x_m - pitch * (p.columns as f64 - 1.0) / 2.0;
    let y0 = p.center_y_m - pitch * (p.rows as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(p.count());
    for r in 0..p.rows {
        for c in 0..p.columns {
            let center = Point::new(x0 + c as f64 * pitch, y0 + r as f64 * pitch);
            let far = Point::new(center.x.abs() + half, center.y.abs() + half);
            if far.norm() > macro_radius_m {
                return Err(Error::config(
                    "buildings",
                    "building lattice extends beyond the macro radius",
                ));
            }
            out.push(Building {
                id: out.len(),
                center,
                half_m: half,
            });
        }
    }
    Ok(out)
}

/// Walls crossed on the path from a cell to a UE.
fn walls_between(cell: &CellNode, ue_building: Option<usize>) -> u32 {
    match (cell.kind, ue_building) {
        (CellKind::Macro, None) => 0,
        (CellKind::Macro, Some(_)) => 1,
        (CellKind::Femto { .. }, None) => 1,
        (CellKind::Femto { building }, Some(b)) if b == building => 0,
        (CellKind::Femto { .. }, Some(_)) => 2,
    }
}

fn draw_position<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Point {
    let b = &cfg.buildings;
    match b.ue_region {
        UeRegion::District if b.count() > 0 => {
            // one lattice tile per building, streets split between tiles
            let w = b.columns as f64 * b.pitch_m();
            let h = b.rows as f64 * b.pitch_m();
            Point::new(
                b.center_x_m + (rng.random::<f64>() - 0.5) * w,
                b.center_y_m + (rng.random::<f64>() - 0.5) * h,
            )
        }
        _ => {
            let r = cfg.cells.macro_radius_m * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            Point::new(r * a.cos(), r * a.sin())
        }
    }
}

pub fn link_budget(
    prop: &PropagationParams,
    cell: &CellNode,
    tx_dbm_per_rb: f64,
    ue_pos: &Point,
    ue_building: Option<usize>,
    shadowing_db: f64,
) -> LinkBudget {
    let distance_m = cell.position.distance(ue_pos);
    let path_loss_db = prop
        .path_loss_db((distance_m / 1000.0).max(f64::MIN_POSITIVE))
        .expect("distance positive after floor");
    let walls = walls_between(cell, ue_building);
    LinkBudget {
        distance_m,
        path_loss_db,
        walls,
        shadowing_db,
        rx_dbm_per_rb: crate::channel::received_dbm(
            tx_dbm_per_rb,
            path_loss_db,
            walls,
            prop.penetration_db,
            shadowing_db,
            0.0,
        ),
    }
}

/// Place buildings, cells and UEs. Pure in `(cfg, seed)`.
pub fn build_topology(cfg: &ScenarioConfig, seed: u64) -> Result<Topology> {
    cfg.validate()?;
    let n_rbs = crate::grid::rbs_for_bandwidth(cfg.bandwidth_mhz)? as f64;
    let per_rb_db = 10.0 * n_rbs.log10();

    let buildings = if cfg.buildings.count() > 0 {
        build_buildings(&cfg.buildings, cfg.cells.macro_radius_m)?
    } else {
        Vec::new()
    };
    let mut cells = vec![CellNode {
        id: MACRO_CELL,
        kind: CellKind::Macro,
        position: Point::new(0.0, 0.0),
        tx_dbm: cfg.cells.macro_tx_dbm,
    }];
    if cfg.femto {
        for b in &buildings {
            cells.push(CellNode {
                id: cells.len(),
                kind: CellKind::Femto { building: b.id },
                position: b.center,
                tx_dbm: cfg.cells.femto_tx_dbm,
            });
        }
    }

    let mut place_rng = substream(seed, "placement", &[]);
    let shadowing = cfg.propagation.shadowing();
    let noise = crate::channel::noise_dbm(
        crate::grid::RB_WIDTH_HZ,
        cfg.cells.noise_density_dbm_hz,
        cfg.cells.noise_figure_db,
    );
    let min_snr_db = if cfg.cells.coverage { cfg.cqi_table()?.threshold_db(1) } else { f64::NEG_INFINITY };
    let macro_cell = cells[MACRO_CELL].clone();
    let mut ues = Vec::with_capacity(cfg.n_ues);
    let mut links = Vec::with_capacity(cfg.n_ues);
    for id in 0..cfg.n_ues {
        // The macro link is drawn first so the UE population is identical
        // with and without femtocells.
        let mut shadow_rng = substream(seed, "shadowing", &[id as u64]);
        let mut attempts = 0;
        let (position, building, macro_link) = loop {
            let (position, fixed) = match cfg.ue_positions.get(id) {
                Some(&[x, y]) => (Point::new(x, y), true),
                None => (draw_position(cfg, &mut place_rng), false),
            };
            let building = buildings.iter().find(|b| b.contains(&position)).map(|b| b.id);
            let s = shadowing.sample(&mut shadow_rng);
            let link = link_budget(
                &cfg.propagation,
                &macro_cell,
                macro_cell.tx_dbm - per_rb_db,
                &position,
                building,
                s,
            );
            if fixed || link.rx_dbm_per_rb - noise >= min_snr_db {
                break (position, building, link);
            }
            attempts += 1;
            if attempts >= MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::config(
                    "cells.coverage",
                    format!("no covered position found for UE {id} after {attempts} draws"),
                ));
            }
        };
        let mut row = vec![macro_link];
        row.extend(cells[1..].iter().map(|c| {
            let s = shadowing.sample(&mut shadow_rng);
            link_budget(&cfg.propagation, c, c.tx_dbm - per_rb_db, &position, building, s)
        }));
        let serving = match (cfg.femto, cfg.buildings.access, building) {
            (false, _, _) => MACRO_CELL,
            (true, Access::Closed, None) => MACRO_CELL,
            (true, Access::Closed, Some(b)) => b + 1,
            (true, Access::Open, _) => row
                .iter()
                .enumerate()
                .fold((MACRO_CELL, f64::NEG_INFINITY), |best, (c, l)| {
                    if l.rx_dbm_per_rb > best.1 {
                        (c, l.rx_dbm_per_rb)
                    } else {
                        best
                    }
                })
                .0,
        };
        ues.push(UePlacement {
            id,
            position,
            building,
            serving,
        });
        links.push(row);
    }

    let flows = (0..cfg.n_ues)
        .flat_map(|ue| {
            FlowClass::ALL.into_iter().map(move |class| FlowPlacement {
                id: flow_id(ue, class),
                ue,
                class,
            })
        })
        .collect();

    Ok(Topology {
        cells,
        buildings,
        ues,
        links,
        flows,
    })
}

impl Topology {
    pub fn ues_of(&self, cell: CellId) -> impl Iterator<Item = &UePlacement> {
        self.ues.iter().filter(move |u| u.serving == cell)
    }

    pub fn indoor_count(&self) -> usize {
        self.ues.iter().filter(|u| u.indoor()).count()
    }
}
