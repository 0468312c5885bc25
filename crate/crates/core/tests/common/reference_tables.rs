//! Published reference values for the damping, error-constant and coefficient tables.
#![allow(dead_code)]

/// `Δ_j` of the first-order family as exact fractions `(numerator, denominator)`, k = 2..10.
pub const DELTAS: &[(usize, &[(u64, u64)])] = &[
    (2, &[(3, 16), (13, 16)]),
    (3, &[(5, 81), (23, 81), (53, 81)]),
    (4, &[(7, 256), (33, 256), (79, 256), (137, 256)]),
    (5, &[(9, 625), (43, 625), (21, 125), (187, 625), (281, 625)]),
    (6, &[(11, 1296), (53, 1296), (131, 1296), (79, 432), (121, 432), (167, 432)]),
    (7, &[(13, 2401), (9, 343), (157, 2401), (41, 343), (445, 2401), (89, 343), (813, 2401)]),
    (8, &[(15, 4096), (73, 4096), (183, 4096), (337, 4096), (527, 4096), (745, 4096), (983, 4096), (1233, 4096)]),
    (9, &[(17, 6561), (83, 6561), (209, 6561), (43, 729), (203, 2187), (289, 2187), (1153, 6561), (1459, 6561), (1777, 6561)]),
    (10, &[(19, 10000), (93, 10000), (47, 2000), (437, 10000), (691, 10000), (989, 10000), (1323, 10000), (337, 2000), (2067, 10000), (2461, 10000)]),
];

/// Error constants `(k, p, C)` as printed.
pub const ERROR_CONSTANTS: &[(usize, usize, f64)] = &[
    (2, 1, 0.75),
    (3, 1, 1.0556),
    (3, 2, 0.66667),
    (4, 1, 1.375),
    (4, 2, 1.0380),
    (4, 3, 0.62500),
    (5, 1, 1.7),
    (5, 2, 1.5208),
    (5, 3, 1.0227),
    (5, 4, 0.59861),
    (6, 1, 2.0278),
    (6, 2, 2.1128),
    (6, 3, 1.5972),
    (6, 4, 1.0120),
    (6, 5, 0.57928),
    (7, 1, 2.3571),
    (7, 2, 2.8134),
    (7, 3, 2.3814),
    (7, 4, 1.6471),
    (7, 5, 1.0032),
    (8, 1, 2.6875),
    (8, 2, 3.6223),
    (8, 3, 3.4092),
    (8, 4, 2.5751),
    (8, 5, 1.6825),
    (8, 6, 0.99505),
    (9, 1, 3.0185),
    (9, 2, 4.5392),
    (9, 3, 4.7148),
    (9, 4, 3.8788),
    (9, 5, 2.7235),
    (9, 6, 1.7079),
    (10, 1, 3.35),
    (10, 2, 5.5643),
    (10, 3, 6.3328),
    (10, 4, 5.6524),
    (10, 5, 4.2616),
    (10, 6, 2.8403),
];

/// Optimized methods `(k, p, ell, beta)`.
pub const COEFFICIENTS: &[(usize, usize, f64, &[f64])] = &[
    (3, 2, 2.0, &[-0.25, 0.0, 1.25]),
    (3, 3, 0.545454545454545455, &[0.41666666666666666667, -1.3333333333333333333, 1.9166666666666666667]),
    (4, 2, 2.914213562373095, &[-0.14644660940673046069, -0.18198051533945963691, 0.30330085889911065590, 1.0251262658470794417]),
    (4, 3, 1.2, &[0.25, -0.33333333333333333333, -0.58333333333333333333, 1.6666666666666666667]),
    (4, 4, 0.3, &[-0.37500000000000000000, 1.5416666666666666667, -2.4583333333333333333, 2.2916666666666666667]),
    (5, 2, 3.788854381999832, &[-0.095491502812526287949, -0.17705098312484227231, 0.0, 0.41311896062463196872, 0.85942352531273659154]),
    (5, 3, 1.793779334348686, &[0.16437694101246125619, -0.0097910917750136439271, -0.54022170408305993867, -0.047691080558684215630, 1.4333269354042965420]),
    (5, 4, 0.75, &[-0.25, 0.625, 0.041666666666666666667, -1.4583333333333333333, 2.0416666666666666667]),
    (5, 5, 0.1633393829401088, &[0.34861111111111111111, -1.7694444444444444444, 3.6333333333333333333, -3.8527777777777777778, 2.6402777777777777778]),
    (6, 2, 4.642734410091836, &[-0.066987298107786995665, -0.14711431702997807715, -0.089745962155603046598, 0.12564434701786943107, 0.44134295108991756459, 0.73686027918558112375]),
    (6, 3, 2.347826086956522, &[0.11574074074074731606, 0.087962962962956387640, -0.28703703703705018768, -0.40740740740739425676, 0.24537037037037694569, 1.2453703703703637950]),
    (6, 4, 1.181897711989360, &[-0.17622805914576966884, 0.21777962430380174276, 0.51616209424248971734, -0.67621677042591625354, -0.68603094336199527180, 1.8045340543873897341]),
    (6, 5, 0.469157254561251, &[0.24942129629629629629, -0.89849537037037037036, 0.72476851851851851851, 1.1391203703703703704, -2.6056712962962962963, 2.3908564814814814815]),
    (6, 6, 0.08771929824561404, &[-0.32986111111111111111, 1.9979166666666666667, -5.0680555555555555556, 6.9319444444444444444, -5.5020833333333333333, 2.9701388888888888889]),
    (7, 2, 5.484476959454063, &[-0.049515566048790436882, -0.11912520277278577227, -0.11018250002552420585, 0.0, 0.19832850004594357054, 0.43679241016688116501, 0.64370235863427567947]),
    (7, 3, 2.877558710633067, &[0.085721156820309456282, 0.11154612811463327941, -0.11721033134808636645, -0.35463665779124584907, -0.21744000532205222576, 0.39557372791516432979, 1.0964459816112773758]),
    (7, 4, 1.586803103995642, &[-0.13027657069924974882, 0.040823321662060514133, 0.45157410201399110594, 0.016001789308425411316, -0.79486796947441511195, -0.18702302114721451156, 1.6037683483364023409]),
    (7, 5, 0.792362028995767, &[0.18480570522895041008, -0.43546201769087620565, -0.24616437886876401181, 1.2681635878048099022, -0.32830322506067306370, -1.5947509407373489642, 2.1517112693239019330]),
    (7, 7, 0.04651391725937046, &[0.31559193121693121693, -2.2234126984126984127, 6.7317956349206349206, -11.379894179894179894, 11.665823412698412698, -7.3956349206349206349, 3.2857308201058201058]),
    (8, 2, 6.318535592272045, &[-0.038060233744366798686, -0.096797724520983369102, -0.10779695287351088696, -0.052994558379770972895, 0.068135860774038963863, 0.23715329632173532873, 0.41945680625751858277, 0.57090350616533915229]),
    (8, 3, 3.391689975797208, &[0.065966021983597280828, 0.11032441087323208003, -0.022713554363876414313, -0.23691021182637878968, -0.30634225579338833174, -0.055862376110155554778, 0.46825151960079988906, 0.97728644563616984059]),
    (8, 4, 1.970916561391601, &[-0.10001878254782277331, -0.035748890463804216949, 0.30658371766113087497, 0.27749085554924180902, -0.33516540035839458087, -0.67199165170356770075, 0.12122231459728224806, 1.4376278372659343398]),
    (8, 5, 1.105498503602666, &[0.14160831078216433500, -0.19477889703735130008, -0.45247252238839228671, 0.57636630123759032103, 0.78354708230483585981, -0.91953823465464150558, -0.87725216386466696327, 1.9425201236204615397]),
    (8, 6, 0.5290722934773335, &[-0.19113689616832294585, 0.65850013289950086628, -0.26698708897333444593, -1.5041640716234265487, 1.8313158841283364334, 0.75394715979782998677, -2.7632927648390354259, 2.4818176447784520799]),
    (8, 8, 0.02440851327616489, &[-0.30422453703703703704, 2.4451636904761904762, -8.6121279761904761905, 17.379654431216931217, -22.027752976190476190, 18.054538690476190476, -9.5252066798941798942, 3.5899553571428571429]),
    (9, 2, 7.147430550561413, &[-0.030153689607037932268, -0.079550128858107345641, -0.098407115533249091604, -0.073305865502781992742, 0.0, 0.11519493150433742625, 0.25585850038645603291, 0.39775064429061670700, 0.51261272331978661124]),
    (9, 3, 3.895290219607647, &[0.052301051895272605013, 0.10126696210118874790, 0.026642016446313140531, -0.13793192915668298604, -0.26695490513260400200, -0.21907659037234928746, 0.064279256258874647289, 0.49902127636474858744, 0.88045286159523854733]),
    (9, 4, 2.339983407348191, &[-0.079129092227346338565, -0.067460438055823679907, 0.18522989963169925608, 0.31675641768693750027, 0.0076996887855987555993, -0.48561642796053139031, -0.48641107197220078201, 0.30896699066825414262, 1.2999640334434125362]),
    (9, 5, 1.405151117615213, &[0.11167958745225367479, -0.068703909200215014827, -0.41559134883278779976, 0.075957984853647800951, 0.78975711968445738645, 0.16879857406276817077, -1.0382277451316307602, -0.38771987715090903834, 1.7640496142624155802]),
    (9, 6, 0.7745044113664562, &[-0.15072405770953055168, 0.36616417962483152368, 0.26486240742135927331, -1.1679360960270178460, -0.049706767276153478305, 1.8307408258122144817, -0.54006451441787310785, -1.8201171395869259716, 2.2667811621590956802]),
    (9, 9, 0.01270447596389330, &[0.29486800044091710758, -2.6631685405643738977, 10.701467702821869489, -25.124736000881834215, 38.020414462081128748, -38.540361000881834215, 26.310842702821869489, -11.884150683421516755, 3.8848233575837742504]),
    (10, 2, 7.972691637812280, &[-0.024471741852422821505, -0.066228831765768206903, -0.087599164129385382526, -0.078738975641538713579, -0.034883488233566344682, 0.042635374507685291073, 0.14622952619142684103, 0.26279749238816316420, 0.37529671333936471557, 0.46496309519604145733]),
    (10, 3, 4.391469108714782, &[0.042467110956300544552, 0.090440497652067647206, 0.051030056647860180918, -0.068250050077061163328, -0.19902094851262917934, -0.24395517042504782618, -0.12913104538091815896, 0.14896994335213981908, 0.50694059780591167508, 0.80050900798137646097]),
    (10, 4, 2.698087099023256, &[-0.064133502960306610717, -0.078573353260495406661, 0.099782736471490155539, 0.27409149956975402355, 0.17521906381042658379, -0.20265793719790100791, -0.50346262595639964788, -0.30713843196368842739, 0.42196137154381443077, 1.1849111799433059069]),
    (10, 5, 1.692885048664239, &[0.090219510737302839601, -0.0021584562050617957037, -0.32195487552605745395, -0.17148478569282268595, 0.47486789482155684885, 0.59839764726184595395, -0.27671853444446566397, -0.94638400314820567730, -0.057121557681252610888, 1.6123371598771602453]),
    (10, 6, 1.015322150308401, &[-0.12149925981588955161, 0.19502001210515154522, 0.40323654967363550399, -0.60200414081780015659, -0.79801775043705878458, 0.91298862642764008111, 1.1648437230850238167, -1.1001111732352200672, -1.1334723376167517028, 2.0790157506312693158]),
];

/// Cells for which no method was found.
pub const NOT_CONVERGED: &[(usize, usize)] = &[(7, 6), (8, 7), (9, 7), (9, 8), (10, 7), (10, 8), (10, 9)];
