package com.example.app07;

public class MainActivity {
    private String name = "item 7";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 7);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
