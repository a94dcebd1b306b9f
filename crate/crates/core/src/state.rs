use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Per-particle activation. Encodes the exclusive flag pair
/// `(attractive, repulsive)`: at most one is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Activation {
    #[default]
    Inactive,
    Attractive,
    Repulsive,
}

impl Activation {
    /// `(p^a, p^r)` flags.
    pub fn flags(self) -> (u8, u8) {
        match self {
            Activation::Inactive => (0, 0),
            Activation::Attractive => (1, 0),
            Activation::Repulsive => (0, 1),
        }
    }

    pub fn is_active(self) -> bool {
        self != Activation::Inactive
    }
}

/// Interaction mode of an activated pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionMode {
    Attractive,
    Repulsive,
}

impl InteractionMode {
    pub fn of(activation: Activation) -> Option<InteractionMode> {
        match activation {
            Activation::Inactive => None,
            Activation::Attractive => Some(InteractionMode::Attractive),
            Activation::Repulsive => Some(InteractionMode::Repulsive),
        }
    }
}

/// Immutable label from the initial half-box placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Left,
    Right,
}

impl Tag {
    pub fn index(self) -> usize {
        match self {
            Tag::Left => 0,
            Tag::Right => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec2,
    pub activation: Activation,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParticleState {
    pub particles: Vec<Particle>,
}

impl ParticleState {
    pub fn new(particles: Vec<Particle>) -> Self {
        Self { particles }
    }

    /// Builds a state from positions and activations; tags alternate
    /// left/right so the counts stay balanced.
    pub fn from_parts(positions: &[Vec2], activations: &[Activation]) -> Self {
        assert_eq!(positions.len(), activations.len());
        let particles = positions
            .iter()
            .zip(activations)
            .enumerate()
            .map(|(i, (&position, &activation))| Particle {
                position,
                activation,
                tag: if i % 2 == 0 { Tag::Left } else { Tag::Right },
            })
            .collect();
        Self { particles }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.particles.iter().map(|p| p.position)
    }

    pub fn count_active(&self) -> (usize, usize) {
        self.particles.iter().fold((0, 0), |(a, r), p| match p.activation {
            Activation::Attractive => (a + 1, r),
            Activation::Repulsive => (a, r + 1),
            Activation::Inactive => (a, r),
        })
    }

    pub fn count_tag(&self, tag: Tag) -> usize {
        self.particles.iter().filter(|p| p.tag == tag).count()
    }

    pub fn all_in_box(&self, half_width: f64) -> bool {
        self.particles.iter().all(|p| {
            (-half_width..half_width).contains(&p.position.x) && (-half_width..half_width).contains(&p.position.y)
        })
    }
}
