//! Tactic selection from the filled-shares position relative to the
//! schedule's uncertainty bands.

/// Where the filled shares sit relative to the bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandPosition {
    AboveMiddle,
    BetweenMiddleAndLower,
    BelowLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TacticChoice {
    /// Post-and-wait at the given depth in spreads.
    PostWait(u32),
    /// Dark pool with a high minimum execution size.
    DarkMinSize,
    Peg,
    /// Opportunistic block taking.
    Oltt,
    /// Uniform market-order trading.
    Utt,
}

impl TacticChoice {
    /// Ordinal urgency: 0 for opportunistic posting, 2 for crossing every step.
    pub fn aggressiveness(self) -> u8 {
        match self {
            TacticChoice::PostWait(_) | TacticChoice::DarkMinSize => 0,
            TacticChoice::Peg | TacticChoice::Oltt => 1,
            TacticChoice::Utt => 2,
        }
    }

    pub fn label(self) -> String {
        match self {
            TacticChoice::PostWait(k) => format!("PWT_K{k}"),
            TacticChoice::DarkMinSize => "DarkMinSize".into(),
            TacticChoice::Peg => "PT".into(),
            TacticChoice::Oltt => "OLTT".into(),
            TacticChoice::Utt => "UTT".into(),
        }
    }
}

pub const DEFAULT_PWT_DEPTH: u32 = 1;

/// Allowed tactics for a band position, in listed order.
pub fn select_tactic(pos: BandPosition) -> Vec<TacticChoice> {
    select_tactic_with_depth(pos, DEFAULT_PWT_DEPTH)
}

pub fn select_tactic_with_depth(pos: BandPosition, pwt_depth: u32) -> Vec<TacticChoice> {
    match pos {
        BandPosition::AboveMiddle => {
            vec![TacticChoice::PostWait(pwt_depth), TacticChoice::DarkMinSize]
        }
        BandPosition::BetweenMiddleAndLower => vec![TacticChoice::Peg, TacticChoice::Oltt],
        BandPosition::BelowLower => vec![TacticChoice::Utt],
    }
}
