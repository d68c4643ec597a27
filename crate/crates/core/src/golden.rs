//! Published reference values for the bundled datasets and the simulation
//! study. Values are transcribed as printed, including an evident typo in
//! the leukemia table (a standard error of 0.14 where 1.4 would fit).

#![allow(clippy::approx_constant)]

/// The six tuning parameters used in the dataset tables.
pub const DATA_ALPHAS: [f64; 6] = [0.0, 0.1, 0.3, 0.5, 0.7, 1.0];

/// The tuning parameters of the efficiency tables, as printed. The logistic
/// tables behave as if their fourth column were computed at 0.3; see
/// [`LOGISTIC_EFFECTIVE_ALPHAS`].
pub const RE_ALPHAS: [f64; 8] = [0.0, 0.01, 0.1, 0.25, 0.4, 0.5, 0.7, 1.0];
pub const LOGISTIC_EFFECTIVE_ALPHAS: [f64; 8] = [0.0, 0.01, 0.1, 0.3, 0.4, 0.5, 0.7, 1.0];

#[derive(Debug, Clone, Copy)]
pub struct CoefRow {
    pub name: &'static str,
    pub estimate: [f64; 6],
    pub se: [f64; 6],
    pub p_value: Option<[f64; 6]>,
}

#[derive(Debug, Clone, Copy)]
pub struct CoefTable {
    pub id: &'static str,
    pub preset: &'static str,
    pub rows: &'static [CoefRow],
}

const fn row(name: &'static str, estimate: [f64; 6], se: [f64; 6]) -> CoefRow {
    CoefRow { name, estimate, se, p_value: None }
}

const fn row_p(name: &'static str, estimate: [f64; 6], se: [f64; 6], p: [f64; 6]) -> CoefRow {
    CoefRow { name, estimate, se, p_value: Some(p) }
}

const fn x100(v: [f64; 6]) -> [f64; 6] {
    [v[0] / 100.0, v[1] / 100.0, v[2] / 100.0, v[3] / 100.0, v[4] / 100.0, v[5] / 100.0]
}

pub const EPILEPSY: CoefTable = CoefTable {
    id: "T5",
    preset: "epilepsy",
    rows: &[
        row_p(
            "Intercept",
            [1.9888, 2.1089, 1.9106, 1.9691, 2.0060, 1.9653],
            x100([13.6518, 15.2509, 12.6869, 13.7081, 14.9185, 17.0043]),
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ),
        row_p(
            "Trt",
            [-0.2375, -0.3169, -0.3871, -0.3893, -0.3516, -0.3186],
            x100([7.6816, 8.6812, 7.9139, 8.4566, 9.1111, 10.1787]),
            [0.0030, 0.0006, 0.0, 0.0, 0.0003, 0.0027],
        ),
        row_p(
            "Base",
            [0.0858, 0.0866, 0.1689, 0.1631, 0.1622, 0.1562],
            x100([0.3698, 0.4101, 0.2778, 0.3055, 0.3359, 0.3959]),
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ),
        row_p(
            "Age",
            [0.2308, 0.1153, 0.0408, 0.0362, 0.0242, 0.0559],
            x100([4.1498, 4.7242, 3.9374, 4.2416, 4.6138, 5.2119]),
            [0.0, 0.0177, 0.3045, 0.3972, 0.6017, 0.2878],
        ),
        row_p(
            "Trt:Base",
            [0.0069, 0.0107, 0.0156, 0.0165, 0.0131, 0.0098],
            x100([0.4443, 0.4893, 0.3230, 0.3537, 0.3888, 0.4600]),
            [0.1283, 0.0323, 0.0, 0.0, 0.0013, 0.0373],
        ),
    ],
};

pub const AIDS: CoefTable = CoefTable {
    id: "T6",
    preset: "aids",
    rows: &[
        row("Intercept", [0.9953, 1.0248, 1.0196, 1.0192, 1.0151, 0.8395], [0.17, 0.17, 0.18, 0.19, 0.21, 0.26]),
        row("log10(quarter)", [3.0554, 3.0294, 3.0266, 3.0287, 3.0239, 3.1739], [0.15, 0.15, 0.16, 0.17, 0.19, 0.23]),
    ],
};

pub const AIDS_ONE: CoefTable = CoefTable {
    id: "T6",
    preset: "aids-one-outlier",
    rows: &[
        row("Intercept", [1.2431, 1.1680, 1.0630, 1.2100, 1.1587, 1.0191], [0.16, 0.17, 0.18, 0.18, 0.20, 0.25]),
        row("log10(quarter)", [2.8404, 2.9059, 2.9955, 2.8596, 2.8993, 3.0182], [0.14, 0.15, 0.16, 0.16, 0.18, 0.22]),
    ],
};

pub const AIDS_TWO: CoefTable = CoefTable {
    id: "T6",
    preset: "aids-two-outliers",
    rows: &[
        row("Intercept", [1.7291, 1.2360, 1.2496, 1.0812, 1.1722, 1.0758], [0.15, 0.16, 0.17, 0.19, 0.20, 0.24]),
        row("log10(quarter)", [2.2968, 2.8271, 2.8153, 2.9647, 2.8805, 2.9542], [0.14, 0.14, 0.15, 0.17, 0.18, 0.22]),
    ],
};

pub const LEUKEMIA: CoefTable = CoefTable {
    id: "T7",
    preset: "leukemia",
    rows: &[
        row("Intercept", [-1.3059, -1.2426, 0.1017, 0.1386, 0.1376, 0.1442], [0.81, 0.82, 1.15, 1.27, 1.38, 1.58]),
        row("AG", [2.2613, 2.2058, 2.4381, 2.4574, 2.4512, 2.459], [0.95, 0.97, 1.39, 1.62, 1.87, 2.35]),
        row("WBC", [-0.3181, -0.3405, -2.0017, -2.0246, -1.9844, -1.9635], [0.19, 0.2, 1.39, 1.7, 1.97, 2.47]),
    ],
};

pub const LEUKEMIA_WITHOUT: CoefTable = CoefTable {
    id: "T8",
    preset: "leukemia-without-15",
    rows: &[
        row("Intercept", [0.2152, 0.1868, 0.1544, 0.1407, 0.1374, 0.1436], [1.08, 1.10, 1.17, 1.27, 1.38, 1.58]),
        row("AG", [2.5582, 2.5261, 2.4826, 2.4592, 2.4516, 2.458], [1.24, 1.28, 1.43, 1.62, 1.87, 2.35]),
        row("WBC", [-2.3609, -2.253, -2.111, -2.0286, -1.9846, -1.9623], [1.36, 0.14, 1.48, 1.7, 1.97, 2.46]),
    ],
};

pub const SKIN: CoefTable = CoefTable {
    id: "T9",
    preset: "skin",
    rows: &[
        row("Intercept", [-2.88, -3.14, -19.05, -21.05, -20.85, -23.77], [1.32, 1.48, 12.89, 18.06, 21.35, 32.98]),
        row("log(Rate)", [4.56, 4.83, 24.89, 27.44, 27.2, 31.08], [1.84, 2.07, 16.65, 23.42, 27.86, 43.45]),
        row("log(Volume)", [5.18, 5.46, 30.57, 34.13, 33.97, 39.34], [1.86, 2.12, 21.68, 30.54, 36.27, 56.35]),
    ],
};

pub const SKIN_WITHOUT: CoefTable = CoefTable {
    id: "T9",
    preset: "skin-without-4-18",
    rows: &[
        row("Intercept", [-24.58, -24.13, -22.01, -21.14, -20.86, -23.77], [14.02, 14.89, 15.86, 18.16, 21.43, 32.98]),
        row("log(Rate)", [31.94, 31.36, 28.66, 27.55, 27.21, 31.08], [17.76, 18.97, 20.42, 23.55, 27.94, 43.45]),
        row("log(Volume)", [39.55, 38.9, 35.57, 34.28, 33.97, 39.34], [23.25, 24.81, 26.66, 30.71, 36.37, 56.35]),
    ],
};

pub const CARROTS: CoefTable = CoefTable {
    id: "T10",
    preset: "carrots",
    rows: &[
        row_p(
            "Intercept",
            [1.4805, 1.4880, 1.4974, 1.5157, 1.5310, 1.5569],
            [0.6562, 0.6648, 0.6859, 0.7118, 0.7406, 0.7868],
            [0.0339, 0.0352, 0.0395, 0.0441, 0.0501, 0.0599],
        ),
        row_p(
            "logdose",
            [-1.8175, -1.8163, -1.8102, -1.8102, -1.8102, -1.8152],
            [0.3439, 0.3484, 0.3601, 0.3749, 0.3917, 0.4183],
            [0.0, 0.0, 0.0, 0.0001, 0.0001, 0.0002],
        ),
        row_p(
            "Block1",
            [0.5421, 0.5330, 0.5149, 0.4969, 0.4824, 0.4654],
            [0.2318, 0.2338, 0.2392, 0.2462, 0.2542, 0.2668],
            [0.0284, 0.0322, 0.0421, 0.0554, 0.0704, 0.0945],
        ),
        row_p(
            "Block2",
            [0.8430, 0.8284, 0.7973, 0.7710, 0.7483, 0.7240],
            [0.2260, 0.2283, 0.2344, 0.2422, 0.2510, 0.2649],
            [0.0011, 0.0014, 0.0025, 0.0041, 0.0067, 0.0119],
        ),
    ],
};

/// All coefficient tables in order.
pub const COEF_TABLES: &[CoefTable] =
    &[EPILEPSY, AIDS, AIDS_ONE, AIDS_TWO, LEUKEMIA, LEUKEMIA_WITHOUT, SKIN, SKIN_WITHOUT, CARROTS];

/// Optimal alpha for pilots 0, 0.1, 0.3, 0.5, 0.7 and 1.
pub const OPTIMAL_ALPHA: &[(&str, [f64; 6])] = &[
    ("aids", [0.0, 0.05, 0.05, 0.1, 0.1, 1.0]),
    ("aids-one-outlier", [0.0, 0.2, 0.65, 0.35, 0.55, 0.45]),
    ("aids-two-outliers", [0.0, 0.3, 0.3, 0.55, 0.5, 0.55]),
    ("epilepsy", [0.0, 0.05, 0.35, 0.3, 1.0, 0.95]),
    ("leukemia", [0.0, 0.1, 0.3, 0.3, 0.3, 0.3]),
    ("leukemia-without-15", [0.0, 0.0, 0.1, 0.1, 0.1, 0.1]),
    ("skin", [0.0, 0.1, 0.3, 0.35, 0.35, 0.4]),
    ("skin-without-4-18", [0.0, 0.0, 0.25, 0.3, 0.35, 0.05]),
    ("carrots", [0.0, 0.05, 0.3, 0.55, 0.7, 0.95]),
];

pub const PILOTS: [f64; 6] = DATA_ALPHAS;

#[derive(Debug, Clone, Copy)]
pub struct ReRow {
    pub case: &'static str,
    pub coef: usize,
    pub values: [f64; 8],
}

#[derive(Debug, Clone, Copy)]
pub struct ReTable {
    pub id: &'static str,
    pub logistic: bool,
    pub n: usize,
    pub rows: &'static [ReRow],
}

const fn re(case: &'static str, coef: usize, values: [f64; 8]) -> ReRow {
    ReRow { case, coef, values }
}

pub const RE_POISSON_50: ReTable = ReTable {
    id: "T1",
    logistic: false,
    n: 50,
    rows: &[
        re("I", 0, [100.0, 100.0, 98.3, 91.2, 80.9, 73.5, 58.1, 37.9]),
        re("I", 1, [100.0, 100.0, 98.3, 91.1, 80.7, 73.1, 57.2, 36.4]),
        re("II", 0, [100.0, 99.9, 98.5, 93.2, 85.9, 80.7, 70.5, 56.5]),
        re("II", 1, [100.0, 99.8, 98.4, 93.0, 85.7, 80.5, 70.0, 55.5]),
        re("III", 0, [100.0, 100.0, 98.8, 94.5, 88.9, 85.1, 77.6, 67.7]),
        re("III", 1, [100.0, 100.0, 98.8, 93.7, 88.4, 84.3, 76.0, 64.8]),
        re("IV", 0, [100.0, 100.0, 98.7, 94.4, 88.9, 85.1, 77.8, 68.0]),
        re("IV", 1, [100.0, 100.0, 98.9, 94.3, 88.4, 84.6, 76.6, 66.3]),
        re("V", 0, [100.0, 100.0, 98.9, 94.4, 88.7, 84.9, 77.4, 67.5]),
        re("V", 1, [100.0, 100.0, 98.9, 94.3, 88.1, 84.3, 76.1, 65.7]),
        re("V", 2, [100.0, 100.0, 98.9, 94.1, 88.1, 84.2, 75.9, 65.4]),
        re("VI", 0, [100.0, 100.0, 98.7, 94.2, 88.1, 84.0, 76.0, 65.5]),
        re("VI", 1, [100.0, 100.0, 98.6, 94.3, 88.1, 83.8, 75.8, 65.0]),
        re("VI", 2, [100.0, 100.0, 98.6, 94.3, 88.1, 83.7, 75.7, 64.8]),
    ],
};

pub const RE_POISSON_100: ReTable = ReTable {
    id: "T2",
    logistic: false,
    n: 100,
    rows: &[
        re("I", 0, [100.0, 100.0, 98.2, 89.8, 77.3, 67.7, 48.0, 24.1]),
        re("I", 1, [100.0, 100.0, 98.2, 89.7, 77.0, 67.2, 47.1, 22.9]),
        re("II", 0, [100.0, 100.0, 98.4, 92.4, 83.9, 77.9, 65.4, 48.5]),
        re("II", 1, [100.0, 100.0, 98.4, 92.3, 83.7, 77.5, 64.7, 47.2]),
        re("III", 0, [100.0, 100.0, 98.7, 94.4, 88.9, 85.1, 77.8, 67.9]),
        re("III", 1, [100.0, 100.0, 98.8, 94.4, 88.3, 83.9, 75.6, 64.8]),
        re("IV", 0, [100.0, 100.0, 98.9, 94.4, 89.0, 85.2, 78.0, 68.2]),
        re("IV", 1, [100.0, 100.0, 99.4, 93.8, 89.0, 84.8, 76.9, 66.7]),
        re("V", 0, [100.0, 100.0, 98.7, 94.3, 88.9, 85.0, 77.7, 67.7]),
        re("V", 1, [100.0, 99.9, 98.6, 93.8, 88.2, 83.9, 76.2, 65.6]),
        re("V", 2, [100.0, 99.9, 98.6, 93.8, 88.2, 83.8, 76.0, 65.2]),
        re("VI", 0, [100.0, 100.0, 98.9, 94.2, 88.2, 84.1, 76.2, 65.6]),
        re("VI", 1, [100.0, 100.0, 99.2, 94.2, 88.3, 84.2, 76.0, 65.0]),
        re("VI", 2, [100.0, 100.0, 99.1, 94.2, 88.3, 84.1, 75.7, 64.8]),
    ],
};

pub const RE_LOGISTIC_50: ReTable = ReTable {
    id: "T3",
    logistic: true,
    n: 50,
    rows: &[
        re("I", 0, [100.0, 99.0, 90.7, 74.6, 67.6, 61.3, 50.4, 37.5]),
        re("I", 1, [100.0, 99.2, 92.7, 79.6, 73.8, 68.4, 58.7, 46.7]),
        re("II", 0, [100.0, 99.3, 93.3, 81.2, 75.8, 70.7, 61.5, 50.0]),
        re("II", 1, [100.0, 99.3, 93.3, 81.2, 75.8, 70.7, 61.5, 50.0]),
        re("III", 0, [100.0, 98.6, 86.7, 65.2, 56.5, 49.0, 36.8, 23.9]),
        re("III", 1, [100.0, 98.1, 82.8, 56.9, 47.2, 39.2, 27.1, 15.6]),
        re("IV", 0, [100.0, 99.3, 92.8, 79.8, 74.0, 68.7, 59.1, 47.2]),
        re("IV", 1, [100.0, 99.2, 92.4, 79.0, 73.0, 67.5, 57.7, 45.6]),
        re("V", 0, [100.0, 99.3, 92.7, 79.8, 74.0, 68.6, 59.0, 47.1]),
        re("V", 1, [100.0, 99.2, 92.6, 79.4, 73.5, 68.1, 58.4, 46.3]),
        re("V", 2, [100.0, 99.2, 92.4, 78.9, 72.9, 67.4, 57.5, 45.4]),
        re("VI", 0, [100.0, 99.3, 93.3, 81.1, 75.6, 70.5, 61.3, 49.7]),
        re("VI", 1, [100.0, 99.3, 93.3, 81.1, 75.6, 70.5, 61.3, 49.7]),
        re("VI", 2, [100.0, 99.3, 93.3, 81.1, 75.6, 70.5, 61.3, 49.7]),
    ],
};

pub const RE_LOGISTIC_100: ReTable = ReTable {
    id: "T4",
    logistic: true,
    n: 100,
    rows: &[
        re("I", 0, [100.0, 98.9, 89.8, 72.3, 64.9, 58.2, 46.8, 33.7]),
        re("I", 1, [100.0, 99.2, 92.6, 79.5, 73.6, 68.2, 58.5, 46.5]),
        re("II", 0, [100.0, 99.3, 93.3, 81.2, 75.8, 70.7, 61.5, 50.0]),
        re("II", 1, [100.0, 99.3, 93.3, 81.2, 75.8, 70.7, 61.5, 50.0]),
        re("III", 0, [100.0, 98.6, 87.0, 65.9, 57.4, 49.9, 37.8, 24.8]),
        re("III", 1, [100.0, 98.1, 82.9, 57.2, 47.5, 39.6, 27.4, 15.9]),
        re("IV", 0, [100.0, 99.3, 92.8, 79.9, 74.1, 68.8, 59.2, 47.3]),
        re("IV", 1, [100.0, 99.2, 92.4, 79.0, 73.0, 67.5, 57.7, 45.6]),
        re("V", 0, [100.0, 99.3, 92.8, 79.8, 74.1, 68.7, 59.1, 47.2]),
        re("V", 1, [100.0, 99.2, 92.6, 79.4, 73.6, 68.1, 58.4, 46.4]),
        re("V", 2, [100.0, 99.2, 92.4, 78.9, 72.9, 67.3, 57.5, 45.3]),
        re("VI", 0, [100.0, 99.3, 93.3, 81.1, 75.6, 70.5, 61.3, 49.7]),
        re("VI", 1, [100.0, 99.3, 93.3, 81.1, 75.6, 70.5, 61.3, 49.7]),
        re("VI", 2, [100.0, 99.3, 93.3, 81.1, 75.6, 70.5, 61.3, 49.7]),
    ],
};

pub const RE_TABLES: &[ReTable] = &[RE_POISSON_50, RE_POISSON_100, RE_LOGISTIC_50, RE_LOGISTIC_100];
