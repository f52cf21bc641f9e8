//! Six-temperature linear thermal model of a cooled server room.
//!
//! State ordering (index 0..5) is fixed everywhere a vector or matrix form
//! is used:
//!
//! | idx | field       | meaning                    |
//! |-----|-------------|----------------------------|
//! | 0   | `t_it`      | IT equipment temperature   |
//! | 1   | `t_rack`    | rack temperature           |
//! | 2   | `t_c_aisle` | cold aisle air temperature |
//! | 3   | `t_c_wall`  | cold aisle wall            |
//! | 4   | `t_h_aisle` | hot aisle air temperature  |
//! | 5   | `t_h_wall`  | hot aisle wall             |
//!
//! Input columns are ordered `[t_air_in, p_it, t_out]`. Time is in hours.
//!
//! Production propagation goes through [`discretize_zoh`]; the rack/IT
//! exchange rate is around 3·10⁴ h⁻¹, so explicit integration at a one
//! minute period is unstable. [`rk4_step`] exists as an oracle and needs
//! `dt ≲ 1e-5 h`.

use std::fmt;

use nalgebra::{Complex, SMatrix, SVector};

use crate::error::{Error, Result};

pub type StateVector = SVector<f64, 6>;
pub type InputVector = SVector<f64, 3>;
pub type StateMatrix = SMatrix<f64, 6, 6>;
pub type InputMatrix = SMatrix<f64, 6, 3>;

/// The six plant temperatures, °C.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThermalState {
    pub t_it: f64,
    pub t_rack: f64,
    pub t_c_aisle: f64,
    pub t_c_wall: f64,
    pub t_h_aisle: f64,
    pub t_h_wall: f64,
}

impl ThermalState {
    pub const FIELD_NAMES: [&'static str; 6] = [
        "t_it",
        "t_rack",
        "t_c_aisle",
        "t_c_wall",
        "t_h_aisle",
        "t_h_wall",
    ];

    pub fn uniform(t: f64) -> Self {
        Self::from_array([t; 6])
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            t_it: a[0],
            t_rack: a[1],
            t_c_aisle: a[2],
            t_c_wall: a[3],
            t_h_aisle: a[4],
            t_h_wall: a[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.t_it,
            self.t_rack,
            self.t_c_aisle,
            self.t_c_wall,
            self.t_h_aisle,
            self.t_h_wall,
        ]
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self::from_array([v[0], v[1], v[2], v[3], v[4], v[5]])
    }

    pub fn to_vector(self) -> StateVector {
        StateVector::from(self.to_array())
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &ThermalState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Plant inputs held constant over a control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantInputs {
    /// Supply air temperature, the control input, °C.
    pub t_air_in: f64,
    /// CPU load, kW.
    pub p_it: f64,
    /// Ambient temperature, °C.
    pub t_out: f64,
}

impl PlantInputs {
    pub fn new(t_air_in: f64, p_it: f64, t_out: f64) -> Self {
        Self {
            t_air_in,
            p_it,
            t_out,
        }
    }

    pub fn to_vector(self) -> InputVector {
        InputVector::new(self.t_air_in, self.p_it, self.t_out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_air_in.is_finite() && self.p_it.is_finite() && self.t_out.is_finite()) {
            return Err(Error::NonFinite("plant inputs"));
        }
        if self.p_it < 0.0 {
            return Err(Error::invalid(
                "plant inputs",
                format!("p_it = {} < 0", self.p_it),
            ));
        }
        Ok(())
    }
}

/// How the IT/rack exchange term of the first row is signed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelForm {
    /// `-|a12|·(T_IT - T_Rack)`: the IT temperature relaxes toward the rack.
    #[default]
    Dissipative,
    /// `-a12·(T_IT - T_Rack)` taken literally. With the stock negative `a12`
    /// the plant has an unstable pole near +4.1 h⁻¹ and a negative
    /// supply-air to IT gain.
    AsPrinted,
}

impl ModelForm {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelForm::Dissipative => "dissipative",
            ModelForm::AsPrinted => "as_printed",
        }
    }
}

impl std::str::FromStr for ModelForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dissipative" => Ok(ModelForm::Dissipative),
            "as_printed" => Ok(ModelForm::AsPrinted),
            other => Err(format!(
                "expected `dissipative` or `as_printed`, got `{other}`"
            )),
        }
    }
}

/// The twelve exchange coefficients, h⁻¹ (`a11` is °C per kW·h).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub a31: f64,
    pub a32: f64,
    pub a41: f64,
    pub a42: f64,
    pub a51: f64,
    pub a52: f64,
    pub a61: f64,
    pub a62: f64,
    pub form: ModelForm,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            a11: 2.7248,
            a12: -32.6975,
            a21: 4.2997e3,
            a22: 2.9632e4,
            a31: 537.4670,
            a32: 131.6406,
            a41: 514.2857,
            a42: 153.5354,
            a51: 335.9169,
            a52: 7.7166,
            a61: 12.0,
            a62: 9.6000,
            form: ModelForm::Dissipative,
        }
    }
}

impl ThermalParams {
    pub const COEFFICIENT_NAMES: [&'static str; 12] = [
        "a11", "a12", "a21", "a22", "a31", "a32", "a41", "a42", "a51", "a52", "a61", "a62",
    ];

    pub fn zero() -> Self {
        Self::from_coefficients([0.0; 12], ModelForm::default())
    }

    pub fn with_form(mut self, form: ModelForm) -> Self {
        self.form = form;
        self
    }

    pub fn coefficients(&self) -> [f64; 12] {
        [
            self.a11, self.a12, self.a21, self.a22, self.a31, self.a32, self.a41, self.a42,
            self.a51, self.a52, self.a61, self.a62,
        ]
    }

    pub fn from_coefficients(c: [f64; 12], form: ModelForm) -> Self {
        Self {
            a11: c[0],
            a12: c[1],
            a21: c[2],
            a22: c[3],
            a31: c[4],
            a32: c[5],
            a41: c[6],
            a42: c[7],
            a51: c[8],
            a52: c[9],
            a61: c[10],
            a62: c[11],
            form,
        }
    }

    pub fn coefficient_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "a11" => &mut self.a11,
            "a12" => &mut self.a12,
            "a21" => &mut self.a21,
            "a22" => &mut self.a22,
            "a31" => &mut self.a31,
            "a32" => &mut self.a32,
            "a41" => &mut self.a41,
            "a42" => &mut self.a42,
            "a51" => &mut self.a51,
            "a52" => &mut self.a52,
            "a61" => &mut self.a61,
            "a62" => &mut self.a62,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients().iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("thermal parameters"))
        }
    }

    /// Coefficient multiplying `(T_IT - T_Rack)` in the first row.
    fn it_rack_rate(&self) -> f64 {
        match self.form {
            ModelForm::Dissipative => -self.a12.abs(),
            ModelForm::AsPrinted => -self.a12,
        }
    }
}

/// Right-hand side of the thermal model.
pub fn derivatives(
    state: &ThermalState,
    inputs: &PlantInputs,
    params: &ThermalParams,
) -> Result<StateVector> {
    if !state.is_finite() {
        return Err(Error::NonFinite("thermal state"));
    }
    if !(inputs.t_air_in.is_finite() && inputs.p_it.is_finite() && inputs.t_out.is_finite()) {
        return Err(Error::NonFinite("plant inputs"));
    }
    params.validate()?;

    let p = params;
    let s = state;
    Ok(StateVector::from([
        p.a11 * inputs.p_it + p.it_rack_rate() * (s.t_it - s.t_rack),
        p.a21 * (s.t_c_aisle - s.t_rack) + p.a22 * (s.t_it - s.t_rack),
        p.a31 * (inputs.t_air_in - s.t_c_aisle) + p.a32 * (s.t_c_aisle - s.t_c_wall),
        p.a41 * (inputs.t_out - s.t_c_wall) + p.a42 * (s.t_c_wall - s.t_c_aisle),
        p.a51 * (s.t_rack - s.t_h_aisle) + p.a52 * (s.t_h_aisle - s.t_h_wall),
        p.a61 * (inputs.t_out - s.t_h_wall) + p.a62 * (s.t_h_wall - s.t_h_aisle),
    ]))
}

/// `ẋ = A·x + B·v` form of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpace {
    pub a_matrix: StateMatrix,
    pub b_matrix: InputMatrix,
}

impl StateSpace {
    pub fn derivative(&self, x: &StateVector, v: &InputVector) -> StateVector {
        self.a_matrix * x + self.b_matrix * v
    }

    /// Eigenvalues of `A`, sorted by descending real part.
    pub fn spectrum(&self) -> Vec<Complex<f64>> {
        let mut eig: Vec<_> = self
            .a_matrix
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| b.re.total_cmp(&a.re));
        eig
    }

    pub fn is_open_loop_stable(&self) -> bool {
        self.spectrum().iter().all(|l| l.re < 0.0)
    }
}

pub fn build_state_space(params: &ThermalParams) -> Result<StateSpace> {
    params.validate()?;
    let p = params;
    let c = p.it_rack_rate();

    #[rustfmt::skip]
    let a_matrix = StateMatrix::from_row_slice(&[
        c,     -c,              0.0,             0.0,             0.0,             0.0,
        p.a22, -p.a21 - p.a22,  p.a21,           0.0,             0.0,             0.0,
        0.0,   0.0,             -p.a31 + p.a32,  -p.a32,          0.0,             0.0,
        0.0,   0.0,             -p.a42,          -p.a41 + p.a42,  0.0,             0.0,
        0.0,   p.a51,           0.0,             0.0,             -p.a51 + p.a52,  -p.a52,
        0.0,   0.0,             0.0,             0.0,             -p.a62,          -p.a61 + p.a62,
    ]);
    #[rustfmt::skip]
    let b_matrix = InputMatrix::from_row_slice(&[
        0.0,   p.a11, 0.0,
        0.0,   0.0,   0.0,
        p.a31, 0.0,   0.0,
        0.0,   0.0,   p.a41,
        0.0,   0.0,   0.0,
        0.0,   0.0,   p.a61,
    ]);
    Ok(StateSpace { a_matrix, b_matrix })
}

/// Exact one-period propagator under zero-order hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub ad_matrix: StateMatrix,
    pub bd_matrix: InputMatrix,
    pub dt: f64,
}

impl Discretization {
    pub fn step_vector(&self, x: &StateVector, v: &InputVector) -> StateVector {
        self.ad_matrix * x + self.bd_matrix * v
    }

    pub fn step(&self, state: &ThermalState, inputs: &PlantInputs) -> ThermalState {
        ThermalState::from_vector(&self.step_vector(&state.to_vector(), &inputs.to_vector()))
    }
}

/// `exp([[A, B], [0, 0]]·dt) = [[Ad, Bd], [0, I]]`.
pub fn discretize_zoh(ss: &StateSpace, dt: f64) -> Result<Discretization> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveStep(dt));
    }
    let mut block = SMatrix::<f64, 9, 9>::zeros();
    block
        .fixed_view_mut::<6, 6>(0, 0)
        .copy_from(&(ss.a_matrix * dt));
    block
        .fixed_view_mut::<6, 3>(0, 6)
        .copy_from(&(ss.b_matrix * dt));
    let e = block.exp();
    let ad_matrix: StateMatrix = e.fixed_view::<6, 6>(0, 0).into_owned();
    let bd_matrix: InputMatrix = e.fixed_view::<6, 3>(0, 6).into_owned();
    if ad_matrix
        .iter()
        .chain(bd_matrix.iter())
        .any(|x| !x.is_finite())
    {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(Discretization {
        ad_matrix,
        bd_matrix,
        dt,
    })
}

/// Classical RK4 step with inputs held constant.
pub fn rk4_step(
    state: &ThermalState,
    inputs: &PlantInputs,
    params: &ThermalParams,
    dt: f64,
) -> Result<ThermalState> {
    let f = |x: &StateVector| derivatives(&ThermalState::from_vector(x), inputs, params);
    let x = state.to_vector();
    let k1 = f(&x)?;
    let k2 = f(&(x + k1 * (dt / 2.0))).map_err(|_| Error::IntegrationBlowUp { dt })?;
    let k3 = f(&(x + k2 * (dt / 2.0))).map_err(|_| Error::IntegrationBlowUp { dt })?;
    let k4 = f(&(x + k3 * dt)).map_err(|_| Error::IntegrationBlowUp { dt })?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationBlowUp { dt });
    }
    Ok(ThermalState::from_vector(&next))
}

/// Integrates over `span` with RK4 using the fewest equal substeps no longer
/// than `max_dt`.
pub fn rk4_propagate(
    state: &ThermalState,
    inputs: &PlantInputs,
    params: &ThermalParams,
    span: f64,
    max_dt: f64,
) -> Result<ThermalState> {
    if !(max_dt > 0.0) {
        return Err(Error::NonPositiveStep(max_dt));
    }
    let n = (span / max_dt).ceil().max(1.0) as usize;
    let dt = span / n as f64;
    let mut x = *state;
    for _ in 0..n {
        x = rk4_step(&x, inputs, params, dt)?;
    }
    Ok(x)
}

/// Steady state: solves `A·x = -B·v`.
///
/// Solved as a correction to the uniform state at `t_out`, so a uniform
/// equilibrium (no load, supply air at ambient) comes out exact.
pub fn equilibrium(params: &ThermalParams, inputs: &PlantInputs) -> Result<ThermalState> {
    if !(inputs.t_air_in.is_finite() && inputs.p_it.is_finite() && inputs.t_out.is_finite()) {
        return Err(Error::NonFinite("plant inputs"));
    }
    let ss = build_state_space(params)?;
    let base = ThermalState::uniform(inputs.t_out);
    let residual = derivatives(&base, inputs, params)?;
    let lu = ss.a_matrix.lu();
    if !lu.is_invertible() {
        return Err(Error::NoUniqueEquilibrium);
    }
    let x = base.to_vector() - lu.solve(&residual).ok_or(Error::NoUniqueEquilibrium)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoUniqueEquilibrium);
    }
    Ok(ThermalState::from_vector(&x))
}

/// Supply-air temperature whose equilibrium places `T_IT` at `target`, with
/// the disturbances of `inputs` held. Returns the trimmed inputs and state.
pub fn trim_to_output(
    params: &ThermalParams,
    inputs: &PlantInputs,
    target: f64,
) -> Result<(PlantInputs, ThermalState)> {
    let base = equilibrium(
        params,
        &PlantInputs {
            t_air_in: 0.0,
            ..*inputs
        },
    )?;
    let unit = equilibrium(params, &PlantInputs::new(1.0, 0.0, 0.0))?;
    if unit.t_it.abs() < 1e-12 {
        return Err(Error::invalid(
            "trim",
            "supply air has no steady-state effect on T_IT",
        ));
    }
    let t_air_in = (target - base.t_it) / unit.t_it;
    let trimmed = PlantInputs {
        t_air_in,
        ..*inputs
    };
    Ok((trimmed, equilibrium(params, &trimmed)?))
}

/// Scales `a21`, `a31` and `a51` (air-side exchange) by `multiplier`.
pub fn apply_param_change(params: &ThermalParams, multiplier: f64) -> Result<ThermalParams> {
    if !multiplier.is_finite() || multiplier <= 0.0 {
        return Err(Error::invalid(
            "parameter multiplier",
            format!("{multiplier} is not a positive finite number"),
        ));
    }
    Ok(ThermalParams {
        a21: params.a21 * multiplier,
        a31: params.a31 * multiplier,
        a51: params.a51 * multiplier,
        ..*params
    })
}

impl fmt::Display for ThermalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[IT {:.3}, rack {:.3}, cAisle {:.3}, cWall {:.3}, hAisle {:.3}, hWall {:.3}]",
            self.t_it, self.t_rack, self.t_c_aisle, self.t_c_wall, self.t_h_aisle, self.t_h_wall
        )
    }
}
