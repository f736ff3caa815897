package com.example.app09;

public class MainActivity {
    private String name = "item 9";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 9);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
